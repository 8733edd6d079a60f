#include "hmctools/commands.hpp"

int main(int argc, char** argv) { return hmc::tools::run_cli(argc, argv); }
