#include <string>
#include <vector>

#include "sre/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sre::cli::run(args);
}
