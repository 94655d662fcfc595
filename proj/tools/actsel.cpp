#include <iostream>

#include "actsel/cli.hpp"

int main(int argc, char** argv) { return actsel::cli::run(argc, argv, std::cout, std::cerr); }
