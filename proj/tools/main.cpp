#include <iostream>

#include "regtrack/cli.hpp"

int main(int argc, char** argv) { return regtrack::run_cli(argc, argv, std::cout, std::cerr); }
