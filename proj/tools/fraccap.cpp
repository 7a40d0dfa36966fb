#include <iostream>

#include "fraccap/cli.hpp"

int main(int argc, char** argv) { return fraccap::run_cli(argc, argv, std::cout, std::cerr); }
