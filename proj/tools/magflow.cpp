#include "magflow_cli/commands.hpp"

int main(int argc, char** argv) { return magflow::cli::run(argc, argv); }
