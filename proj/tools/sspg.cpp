#include <iostream>

#include "sspg/cli.hpp"

int main(int argc, char** argv) { return sspg::cli::cli_main(argc, argv, std::cout, std::cerr); }
