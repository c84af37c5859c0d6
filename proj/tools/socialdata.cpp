#include <iostream>
#include <string>
#include <vector>

#include "socialdata/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return socialdata::cli::run(args, std::cout, std::cerr);
}
