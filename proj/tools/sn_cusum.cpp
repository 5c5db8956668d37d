#include <iostream>
#include <string>
#include <vector>

#include "sncusum/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sncusum::cli::run(args, std::cout, std::cerr);
}
