#include "mhqg/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mhqg::run_cli(argc, argv, std::cout, std::cerr); }
