#include <iostream>

#include "cv4code/cli/cli.hpp"

int main(int argc, char** argv) { return cv4code::cli::run(argc, argv, std::cout, std::cerr); }
