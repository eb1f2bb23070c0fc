#include <iostream>

#include "relcl/cli.hpp"

int main(int argc, char** argv) { return relcl::run_cli(argc, argv, std::cout, std::cerr); }
