#include <iostream>

#include "nmar/cli.hpp"

int main(int argc, char** argv) { return nmar::cli::run(argc, argv, std::cout, std::cerr); }
