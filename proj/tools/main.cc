#include <iostream>
#include <string>
#include <vector>

#include "augtriever/cli.h"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return augtriever::cli::dispatch(args, std::cout, std::cerr);
}
