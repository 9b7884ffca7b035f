#include "tdirac/cli.hpp"

int main(int argc, char** argv) { return tdirac::cli::run(argc, argv, std::cout, std::cerr); }
