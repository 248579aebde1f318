#include <iostream>

#include "warpp/cli.hpp"

int main(int argc, char** argv) { return warpp::run_cli(argc, argv, std::cout, std::cerr); }
