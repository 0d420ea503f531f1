#include "stochfield_cli/commands.hpp"

int main(int argc, char** argv) { return stochfield::cli::run_cli(argc, argv); }
