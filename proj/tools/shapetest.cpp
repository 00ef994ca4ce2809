#include <iostream>

#include "shapetest/cli.hpp"

int main(int argc, char** argv) {
    return shapetest::cli::run(argc, argv, std::cout, std::cerr);
}
