#include "gbsde/cli.hpp"

#include "gbsde/errors.hpp"
#include "gbsde/problems.hpp"
#include "gbsde/rate_fit.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace gbsde::cli {

namespace {

using Json = nlohmann::ordered_json;

struct KeyInfo {
    const char* key;
    const char* help;
};

const KeyInfo kKeys[] = {
    {"problem", "problem id (example1, example2, martingale, constant, variance, sine_heat)"},
    {"sigma2", "lower variance bound sigma_lo^2"},
    {"sigma2-hi", "upper variance bound sigma_hi^2"},
    {"theta1", "implicit weight of the dt driver, in [0, 1]"},
    {"theta2", "implicit weight of the d<B> driver, in [0, 1]"},
    {"N", "comma-separated list of time step counts"},
    {"M", "lattice depth, or auto"},
    {"dx", "grid spacing, or auto (= T / N)"},
    {"D", "half width of the reported spatial domain"},
    {"pad", "extra grid padding on each side, or auto (= 3 sqrt(sigma_hi^2 T))"},
    {"tol", "Picard tolerance"},
    {"picard-max-iter", "Picard iteration limit"},
    {"tol-m", "accepted probe change when choosing M automatically"},
    {"m0", "first depth tried when choosing M automatically"},
    {"m-cap", "largest depth tried when choosing M automatically"},
    {"threads", "worker threads for the grid sweep (0 = all cores)"},
    {"timing", "on: record runtimes; off: write runtime_ms = 0"},
    {"out", "results CSV path"},
    {"rates", "rates CSV path (default <out stem>.rates.csv)"},
    {"manifest", "JSON manifest path (default <out stem>.manifest.json)"},
};

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool known_key(const std::string& key)
{
    for (const auto& k : kKeys) {
        if (key == k.key) {
            return true;
        }
    }
    return false;
}

double parse_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
        throw ConfigurationError("invalid number for '" + key + "': '" + text + "'");
    }
    return v;
}

long long parse_integer(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigurationError("invalid integer for '" + key + "': '" + text + "'");
    }
    return v;
}

int parse_int(const std::string& key, const std::string& text)
{
    const long long v = parse_integer(key, text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigurationError("integer out of range for '" + key + "': '" + text + "'");
    }
    return static_cast<int>(v);
}

bool is_auto(const std::string& text) { return trim(text) == "auto"; }

std::string format_double(double v)
{
    // Shortest text that reads back to the same double.
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_sci(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.5E", v);
    return buf;
}

std::string stem_of(const std::string& path)
{
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        return path.substr(0, dot);
    }
    return path;
}

std::string json_value_text(const Json& v)
{
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_array()) {
        std::string joined;
        for (const auto& item : v) {
            if (!joined.empty()) {
                joined += ',';
            }
            joined += json_value_text(item);
        }
        return joined;
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "on" : "off";
    }
    if (v.is_number_integer()) {
        return std::to_string(v.get<long long>());
    }
    if (v.is_number()) {
        return format_double(v.get<double>());
    }
    throw ConfigurationError("unsupported JSON value in config: " + v.dump());
}

}  // namespace

SchemeParams RunConfig::scheme_params(int n_steps) const
{
    SchemeParams p;
    p.theta1 = theta1;
    p.theta2 = theta2;
    p.n_steps = n_steps;
    p.lattice_depth = lattice_depth;
    p.depth_policy = depth_policy;
    p.picard_tol = picard_tol;
    p.picard_max_iter = picard_max_iter;
    p.threads = threads;
    return p;
}

GridOptions RunConfig::grid_options() const { return {half_width, dx, pad}; }

std::string RunConfig::rates_path() const
{
    return rates.empty() ? stem_of(out) + ".rates.csv" : rates;
}

std::string RunConfig::manifest_path() const
{
    return manifest.empty() ? stem_of(out) + ".manifest.json" : manifest;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& info : kKeys) {
            k.emplace_back(info.key);
        }
        return k;
    }();
    return keys;
}

KeyValues parse_key_values(std::istream& in, const std::string& source)
{
    KeyValues values;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigurationError(source + ":" + std::to_string(number) +
                                     ": expected 'key = value', got '" + body + "'");
        }
        const std::string key = trim(body.substr(0, eq));
        if (!known_key(key)) {
            throw ConfigurationError(source + ":" + std::to_string(number) + ": unknown key '" +
                                     key + "'");
        }
        values[key] = trim(body.substr(eq + 1));
    }
    return values;
}

KeyValues read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigurationError("cannot open config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
        std::istringstream lines(text);
        return parse_key_values(lines, path);
    }

    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigurationError("malformed JSON in '" + path + "': " + e.what());
    }
    if (!doc.contains("config") || !doc["config"].is_object()) {
        throw ConfigurationError("JSON config '" + path + "' has no \"config\" object");
    }
    KeyValues values;
    for (const auto& [key, value] : doc["config"].items()) {
        if (!known_key(key)) {
            throw ConfigurationError(path + ": unknown key '" + key + "'");
        }
        values[key] = json_value_text(value);
    }
    return values;
}

RunConfig build_config(const KeyValues& values)
{
    RunConfig c;
    for (const auto& [key, value] : values) {
        if (key == "problem") {
            c.problem_id = trim(value);
        } else if (key == "sigma2") {
            c.sigma_lo_sq = parse_double(key, value);
        } else if (key == "sigma2-hi") {
            c.sigma_hi_sq = parse_double(key, value);
        } else if (key == "theta1") {
            c.theta1 = parse_double(key, value);
        } else if (key == "theta2") {
            c.theta2 = parse_double(key, value);
        } else if (key == "N") {
            c.n_list.clear();
            std::stringstream list(value);
            std::string item;
            while (std::getline(list, item, ',')) {
                c.n_list.push_back(parse_int(key, item));
            }
            if (c.n_list.empty()) {
                throw ConfigurationError("'N' needs at least one step count");
            }
        } else if (key == "M") {
            c.lattice_depth = is_auto(value) ? std::nullopt : std::optional(parse_int(key, value));
        } else if (key == "dx") {
            c.dx = is_auto(value) ? std::nullopt : std::optional(parse_double(key, value));
        } else if (key == "D") {
            c.half_width = parse_double(key, value);
        } else if (key == "pad") {
            c.pad = is_auto(value) ? std::nullopt : std::optional(parse_double(key, value));
        } else if (key == "tol") {
            c.picard_tol = parse_double(key, value);
        } else if (key == "picard-max-iter") {
            c.picard_max_iter = parse_int(key, value);
        } else if (key == "tol-m") {
            c.depth_policy.tol = parse_double(key, value);
        } else if (key == "m0") {
            c.depth_policy.initial = parse_int(key, value);
        } else if (key == "m-cap") {
            c.depth_policy.cap = parse_int(key, value);
        } else if (key == "threads") {
            const long long t = parse_integer(key, value);
            if (t < 0 || t > 4096) {
                throw ConfigurationError("'threads' must be in [0, 4096]");
            }
            c.threads = static_cast<unsigned>(t);
        } else if (key == "timing") {
            const std::string v = trim(value);
            if (v == "on" || v == "true" || v == "1") {
                c.timing = true;
            } else if (v == "off" || v == "false" || v == "0") {
                c.timing = false;
            } else {
                throw ConfigurationError("'timing' must be on or off, got '" + value + "'");
            }
        } else if (key == "out") {
            c.out = trim(value);
        } else if (key == "rates") {
            c.rates = trim(value);
        } else if (key == "manifest") {
            c.manifest = trim(value);
        } else {
            throw ConfigurationError("unknown key '" + key + "'");
        }
    }
    if (c.out.empty()) {
        throw ConfigurationError("'out' must not be empty");
    }
    return c;
}

KeyValues to_key_values(const RunConfig& c)
{
    KeyValues v;
    v["problem"] = c.problem_id;
    v["sigma2"] = format_double(c.sigma_lo_sq);
    v["sigma2-hi"] = format_double(c.sigma_hi_sq);
    v["theta1"] = format_double(c.theta1);
    v["theta2"] = format_double(c.theta2);
    std::string ns;
    for (int n : c.n_list) {
        if (!ns.empty()) {
            ns += ',';
        }
        ns += std::to_string(n);
    }
    v["N"] = ns;
    v["M"] = c.lattice_depth ? std::to_string(*c.lattice_depth) : "auto";
    v["dx"] = c.dx ? format_double(*c.dx) : "auto";
    v["D"] = format_double(c.half_width);
    v["pad"] = c.pad ? format_double(*c.pad) : "auto";
    v["tol"] = format_double(c.picard_tol);
    v["picard-max-iter"] = std::to_string(c.picard_max_iter);
    v["tol-m"] = format_double(c.depth_policy.tol);
    v["m0"] = std::to_string(c.depth_policy.initial);
    v["m-cap"] = std::to_string(c.depth_policy.cap);
    v["threads"] = std::to_string(c.threads);
    v["timing"] = c.timing ? "on" : "off";
    v["out"] = c.out;
    v["rates"] = c.rates_path();
    v["manifest"] = c.manifest_path();
    return v;
}

namespace {

enum class Mode { kStudy, kSingle };

struct Prepared {
    ProblemCatalogEntry problem;
    std::vector<std::pair<int, GridSpec>> grids;  // per N
};

Prepared prepare(const RunConfig& c, Mode mode)
{
    const UncertaintySpec u{c.sigma_lo_sq, c.sigma_hi_sq};
    u.validate();
    auto entry = find_problem(c.problem_id, u);
    if (!entry) {
        std::string known;
        for (const auto& e : problem_catalog(u)) {
            known += (known.empty() ? "" : ", ") + e.id;
        }
        throw ConfigurationError("unknown problem id '" + c.problem_id + "' (known: " + known + ")");
    }
    entry->spec.validate();
    if (mode == Mode::kSingle && c.n_list.size() != 1) {
        throw ConfigurationError("'single' needs exactly one value of N");
    }
    for (std::size_t i = 0; i < c.n_list.size(); ++i) {
        if (i > 0 && c.n_list[i] <= c.n_list[i - 1]) {
            throw ConfigurationError("N values must be strictly increasing");
        }
    }
    std::vector<std::string> outputs{c.manifest};
    if (mode == Mode::kStudy) {
        outputs = {c.out, c.rates_path(), c.manifest_path()};
    }
    for (const auto& path : outputs) {
        const auto dir = std::filesystem::path(path).parent_path();
        if (!path.empty() && !dir.empty() && !std::filesystem::is_directory(dir)) {
            throw ConfigurationError("output directory does not exist: '" + dir.string() + "'");
        }
    }
    Prepared p{*entry, {}};
    for (int n : c.n_list) {
        const SchemeParams params = c.scheme_params(n);
        params.validate();
        const GridSpec grid = resolve_grid(c.grid_options(), entry->spec, params);
        grid.validate();
        p.grids.emplace_back(n, grid);
    }
    return p;
}

struct Outcome {
    ErrorTable table;
    int depth = 0;
    bool depth_auto = false;
    std::optional<DepthSelection> selection;
};

Outcome compute(const RunConfig& c, const Prepared& p)
{
    Outcome o;
    const ProblemSpec& spec = p.problem.spec;
    SchemeParams base = c.scheme_params(c.n_list.front());
    if (c.lattice_depth) {
        o.depth = *c.lattice_depth;
    } else {
        o.depth_auto = true;
        o.selection = select_study_depth(spec, c.grid_options(), base, c.n_list.front());
        o.depth = o.selection->depth;
    }
    base.lattice_depth = o.depth;

    if (spec.exact_y0 && c.n_list.size() >= 2) {
        o.table = convergence_study(spec, c.grid_options(), base, c.n_list);
    } else {
        for (const auto& [n, grid] : p.grids) {
            SchemeParams params = base;
            params.n_steps = n;
            const SolveResult r = solve(spec, grid, params);
            ErrorRow row;
            row.n_steps = n;
            row.y0 = r.y0_at_origin;
            row.error = spec.exact_y0 ? std::abs(r.y0_at_origin - *spec.exact_y0)
                                      : std::numeric_limits<double>::quiet_NaN();
            row.runtime_ms = std::chrono::duration<double, std::milli>(r.wall_time).count();
            row.depth = r.m_used;
            row.picard_iters_max = r.picard_iters_max;
            row.dx = grid.dx;
            o.table.rows.push_back(row);
            o.table.warnings.insert(o.table.warnings.end(), r.warnings.begin(), r.warnings.end());
        }
    }
    if (o.selection && o.selection->capped) {
        std::ostringstream os;
        os << "lattice depth capped at " << o.selection->depth << " with probe change "
           << o.selection->achieved_delta << " > " << c.depth_policy.tol;
        o.table.warnings.insert(o.table.warnings.begin(), os.str());
    }
    if (!c.timing) {
        for (auto& row : o.table.rows) {
            row.runtime_ms = 0.0;
        }
    }
    return o;
}

std::string results_csv(const RunConfig&, const Prepared& p, const Outcome& o)
{
    const bool exact = p.problem.spec.exact_y0.has_value();
    std::string csv = exact ? "N,error,runtime_ms\n" : "N,y0,runtime_ms\n";
    for (const auto& row : o.table.rows) {
        csv += std::to_string(row.n_steps) + ',' + format_sci(exact ? row.error : row.y0) + ',' +
               format_sci(row.runtime_ms) + '\n';
    }
    return csv;
}

std::string rates_csv(const Outcome& o)
{
    std::string csv = "log2_N,log10_error\n";
    for (const auto& row : o.table.rows) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", std::log2(static_cast<double>(row.n_steps)),
                      std::log10(row.error));
        csv += buf;
    }
    return csv;
}

Json manifest_json(const RunConfig& c, const Prepared& p, const Outcome& o, Mode mode)
{
    Json m;
    m["tool"] = "gbsde";
    m["version"] = "0.1.0";
    m["command"] = mode == Mode::kStudy ? "study" : "single";
    Json config = Json::object();
    for (const auto& [key, value] : to_key_values(c)) {
        config[key] = value;
    }
    m["config"] = config;

    const ProblemSpec& spec = p.problem.spec;
    Json resolved;
    resolved["problem"] = p.problem.id;
    resolved["description"] = p.problem.description;
    resolved["horizon"] = spec.horizon;
    resolved["sigma_lo_sq"] = spec.uncertainty.sigma_lo_sq;
    resolved["sigma_hi_sq"] = spec.uncertainty.sigma_hi_sq;
    resolved["theta1"] = c.theta1;
    resolved["theta2"] = c.theta2;
    resolved["exact_y0"] = spec.exact_y0 ? Json(*spec.exact_y0) : Json(nullptr);
    resolved["lipschitz_bound"] = spec.lipschitz_bound;
    resolved["lattice_depth"] = o.depth;
    resolved["lattice_depth_auto"] = o.depth_auto;
    resolved["depth_policy"] = {{"initial", c.depth_policy.initial},
                                {"cap", c.depth_policy.cap},
                                {"tol", c.depth_policy.tol}};
    if (o.selection) {
        resolved["depth_selection"] = {{"probe_n", c.n_list.front()},
                                       {"achieved_delta", o.selection->achieved_delta},
                                       {"capped", o.selection->capped}};
    }
    resolved["picard_tol"] = c.picard_tol;
    resolved["picard_max_iter"] = c.picard_max_iter;
    resolved["timing"] = c.timing;
    Json grids = Json::array();
    for (const auto& [n, grid] : p.grids) {
        grids.push_back({{"N", n},
                         {"dt", spec.horizon / n},
                         {"dx", grid.dx},
                         {"half_width", grid.half_width},
                         {"pad", grid.pad},
                         {"points", grid.points().size()}});
    }
    resolved["grids"] = grids;
    m["resolved"] = resolved;

    Json rows = Json::array();
    for (const auto& row : o.table.rows) {
        Json r;
        r["N"] = row.n_steps;
        r["y0"] = row.y0;
        r["error"] = std::isnan(row.error) ? Json(nullptr) : Json(row.error);
        r["runtime_ms"] = row.runtime_ms;
        r["lattice_depth"] = row.depth;
        r["picard_iters_max"] = row.picard_iters_max;
        rows.push_back(r);
    }
    m["results"] = rows;
    if (o.table.rate) {
        m["rate"] = {{"slope", o.table.rate->slope},
                     {"intercept", o.table.rate->intercept},
                     {"residual", o.table.rate->residual}};
    } else {
        m["rate"] = nullptr;
    }
    m["below_noise_floor"] = o.table.below_noise_floor;
    m["warnings"] = o.table.warnings;
    return m;
}

void write_file(const std::string& path, const std::string& contents)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw ConfigurationError("cannot write '" + path + "'");
    }
    f << contents;
    if (!f) {
        throw ConfigurationError("failed writing '" + path + "'");
    }
}

int execute(const RunConfig& c, Mode mode, std::ostream& out, std::ostream& err)
{
    const Prepared p = prepare(c, mode);
    const Outcome o = compute(c, p);
    for (const auto& w : o.table.warnings) {
        err << "warning: " << w << '\n';
    }
    const bool exact = p.problem.spec.exact_y0.has_value();

    if (mode == Mode::kSingle) {
        double y0 = o.table.rows.front().y0;
        if (std::abs(y0) < 5e-13) {
            y0 = 0.0;
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12f", y0);
        out << buf << '\n';
        if (!c.manifest.empty()) {
            write_file(c.manifest, manifest_json(c, p, o, mode).dump(2) + '\n');
        }
        return kOk;
    }

    const std::string csv = results_csv(c, p, o);
    const std::string manifest = manifest_json(c, p, o, mode).dump(2) + '\n';
    write_file(c.out, csv);
    if (exact) {
        write_file(c.rates_path(), rates_csv(o));
    }
    write_file(c.manifest_path(), manifest);

    out << csv;
    out << "problem=" << p.problem.id << " sigma2=" << c.sigma_lo_sq << " theta=(" << c.theta1
        << ',' << c.theta2 << ") M=" << o.depth << (o.depth_auto ? " (auto)" : "") << '\n';
    if (o.table.rate) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "CR = %.4f (log-log residual %.3E)", o.table.rate->slope,
                      o.table.rate->residual);
        out << buf << '\n';
    } else if (!exact) {
        out << "CR omitted: no exact solution\n";
    } else if (o.table.below_noise_floor) {
        out << "CR omitted: errors below noise floor " << format_sci(kNoiseFloor) << '\n';
    } else {
        out << "CR omitted: needs at least two values of N\n";
    }
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Theta-scheme solver for backward SDEs driven by G-Brownian motion"};
    app.name("gbsde");
    app.require_subcommand(1);

    struct Command {
        CLI::App* app;
        Mode mode;
        std::string config_path;
        KeyValues flags;
    };
    std::vector<Command> commands;
    commands.reserve(2);
    commands.push_back({app.add_subcommand("study", "convergence study over a list of N"),
                        Mode::kStudy, {}, {}});
    commands.push_back({app.add_subcommand("single", "one solve; prints Y0 at x = 0"),
                        Mode::kSingle, {}, {}});
    for (auto& cmd : commands) {
        cmd.app->add_option("--config", cmd.config_path,
                            "key=value file or JSON manifest; flags override its values");
        for (const auto& info : kKeys) {
            cmd.app->add_option(std::string("--") + info.key, cmd.flags[info.key], info.help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    for (auto& cmd : commands) {
        if (!cmd.app->parsed()) {
            continue;
        }
        try {
            KeyValues values;
            if (!cmd.config_path.empty()) {
                values = read_config_file(cmd.config_path);
            }
            for (const auto& info : kKeys) {
                if (cmd.app->count(std::string("--") + info.key) > 0) {
                    values[info.key] = cmd.flags[info.key];
                }
            }
            return execute(build_config(values), cmd.mode, out, err);
        } catch (const StepError& e) {
            err << "numeric failure";
            if (e.step() >= 0) {
                err << " at n=" << e.step();
            }
            err << ", x=" << e.x() << ": " << e.what() << '\n';
            return kNumericFailure;
        } catch (const InvalidArgument& e) {
            err << "config error: " << e.what() << '\n';
            return kConfigError;
        } catch (const ConfigurationError& e) {
            err << "config error: " << e.what() << '\n';
            return kConfigError;
        } catch (const Error& e) {
            err << "numeric failure: " << e.what() << '\n';
            return kNumericFailure;
        }
    }
    return kConfigError;
}

}  // namespace gbsde::cli
