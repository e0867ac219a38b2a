#include "stochham/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return stochham::cli::main_entry(argc, argv, std::cout, std::cerr); }
