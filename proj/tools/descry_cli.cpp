#include <iostream>

#include "descry/cli.hpp"

int main(int argc, char** argv) { return descry::run_cli(argc, argv, std::cout, std::cerr); }
