#include <iostream>

#include "safercross/cli.hpp"

int main(int argc, char** argv) { return safercross::cli::main(argc, argv, std::cout, std::cerr); }
