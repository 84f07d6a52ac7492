#include "acs/cli.hpp"

int main(int argc, char** argv) { return acs::cli::run_cli(argc, argv); }
