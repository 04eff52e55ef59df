#include <iostream>

#include "lmlt/cli.hpp"

int main(int argc, char** argv) { return lmlt::cli::run(argc, argv, std::cout, std::cerr); }
