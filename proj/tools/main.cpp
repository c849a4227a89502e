#include <iostream>

#include "modgrad/cli.hpp"

int main(int argc, char** argv) { return modgrad::cli::run(argc, argv, std::cout, std::cerr); }
