#include <string>
#include <vector>

#include "fruitgrade/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return fruitgrade::cli::run_cli(args);
}
