#include <iostream>

#include "hgformer/cli.hpp"

int main(int argc, char** argv) { return hgformer::cli_main(argc, argv, std::cout, std::cerr); }
