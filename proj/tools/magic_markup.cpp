#include <iostream>

#include "magic_markup/cli.hpp"

int main(int argc, char** argv) {
    return magic_markup::run_cli(argc, argv, std::cout, std::cerr);
}
