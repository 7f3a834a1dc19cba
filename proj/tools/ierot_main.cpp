#include <iostream>
#include <string>
#include <vector>

#include "ierot/cli.hpp"

int main(int argc, char** argv) {
    return ierot::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
