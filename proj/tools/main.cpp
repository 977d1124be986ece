#include "cli/run.hpp"

int main(int argc, char** argv) { return spinbus::cli::run_cli(argc, argv); }
