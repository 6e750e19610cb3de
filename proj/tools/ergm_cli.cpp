#include "ergm/cli.hpp"

int main(int argc, char** argv) { return ergm::run_cli(argc, argv); }
