#include <iostream>

#include "arl/cli.hpp"

int main(int argc, char** argv) { return arl::cli::run(argc, argv, std::cout, std::cerr); }
