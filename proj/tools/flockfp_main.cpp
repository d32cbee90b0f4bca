#include "flockfp/cli.hpp"

int main(int argc, char** argv) {
    return flockfp::run_cli(argc, argv);
}
