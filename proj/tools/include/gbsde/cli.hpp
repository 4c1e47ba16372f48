#pragma once

#include "gbsde/scheme.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gbsde::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kNumericFailure = 3,
};

/// Raw configuration: key -> textual value, as read from a file or the command line.
using KeyValues = std::map<std::string, std::string>;

/// Fully resolved run configuration. Every field is written back to the manifest.
struct RunConfig {
    std::string problem_id = "example1";
    double sigma_lo_sq = 0.25;
    double sigma_hi_sq = 1.0;
    double theta1 = 0.0;
    double theta2 = 0.0;
    std::vector<int> n_list{8, 16, 32, 64, 128};
    std::optional<int> lattice_depth;  // empty: auto
    std::optional<double> dx;          // empty: dt
    double half_width = 3.0;
    std::optional<double> pad;         // empty: 3 sqrt(sigma_hi_sq T)
    double picard_tol = 1e-12;
    int picard_max_iter = 100;
    DepthPolicy depth_policy;
    unsigned threads = 0;
    bool timing = true;  // false writes runtime_ms = 0 so outputs are reproducible byte for byte
    std::string out = "results.csv";
    std::string rates;     // empty: <out stem>.rates.csv
    std::string manifest;  // empty: <out stem>.manifest.json

    SchemeParams scheme_params(int n_steps) const;
    GridOptions grid_options() const;
    std::string rates_path() const;
    std::string manifest_path() const;
};

/// Keys understood in config files and as `--key` flags.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
/// Throws ConfigurationError on malformed lines or unknown keys.
KeyValues parse_key_values(std::istream& in, const std::string& source);

/// Reads a config file: a JSON manifest (first non-blank character `{`, its "config" object
/// is used) or a key=value text file. Throws ConfigurationError.
KeyValues read_config_file(const std::string& path);

/// Applies `values` on top of the defaults. Throws ConfigurationError on bad values.
RunConfig build_config(const KeyValues& values);

/// Canonical textual form of every field; build_config(to_key_values(c)) reproduces c.
KeyValues to_key_values(const RunConfig& config);

/// Entry point of the `gbsde` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gbsde::cli
