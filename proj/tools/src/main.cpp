#include <iostream>

#include "netdeconf/cli/cli.hpp"

int main(int argc, char** argv) { return netdeconf::cli::run(argc, argv, std::cout, std::cerr); }
