#include <iostream>

#include "qter/cli.hpp"

int main(int argc, char** argv) { return qter::run_cli(argc, argv, std::cout, std::cerr); }
