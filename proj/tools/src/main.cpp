#include "gbsde/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gbsde::cli::run(argc, argv, std::cout, std::cerr); }
