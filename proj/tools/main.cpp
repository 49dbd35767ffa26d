#include <string>
#include <vector>

#include "spinquant/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return spinquant::run_cli(args);
}
