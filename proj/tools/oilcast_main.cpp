#include <vector>

#include "oilcast/cli.hpp"

int main(int argc, char** argv) {
    return oilcast::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
