#include <iostream>

#include "sdown/cli.hpp"

int main(int argc, char** argv) { return sdown::cli::run(argc, argv, std::cout, std::cerr); }
