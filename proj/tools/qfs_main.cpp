#include <iostream>

#include "qfs/cli.hpp"

int main(int argc, char **argv) { return qfs::cli::run_cli(argc, argv, std::cout, std::cerr); }
