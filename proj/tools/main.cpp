#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return localsgd_lab::cli::main(argc, argv, std::cout, std::cerr); }
