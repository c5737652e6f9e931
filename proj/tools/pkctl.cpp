#include "pk/cli.hpp"

int main(int argc, char** argv) { return pk::cli::main(argc, argv, std::cout, std::cerr); }
