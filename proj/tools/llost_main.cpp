#include <string>
#include <vector>

#include "llost/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return llost::run_cli(args);
}
