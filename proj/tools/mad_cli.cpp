#include "mad/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mad::run_cli(argc, argv, std::cout, std::cerr); }
