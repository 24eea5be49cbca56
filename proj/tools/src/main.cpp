#include <iostream>

#include "ctsynth_cli/commands.hpp"

int main(int argc, char** argv) { return ctsynth::cli::run_cli(argc, argv, std::cout, std::cerr); }
