#include <iostream>

#include "pbn/cli.hpp"

int main(int argc, char** argv) { return pbn::cli::run(argc, argv, std::cout, std::cerr); }
