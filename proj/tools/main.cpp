#include "cli/cli.hpp"

int main(int argc, char** argv) { return asap::cli::run(argc, argv); }
