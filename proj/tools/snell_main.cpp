#include "commands.hpp"

int main(int argc, char** argv) { return snell::cli::run_cli(argc, argv); }
