#include "wrfml/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return wrfml::cli::run(argc, argv, std::cout, std::cerr);
}
