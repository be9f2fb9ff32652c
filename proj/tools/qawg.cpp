#include <iostream>

#include "qawg/cli.hpp"

int main(int argc, char** argv) { return qawg::cli::run(argc, argv, std::cout, std::cerr); }
