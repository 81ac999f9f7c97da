#include "balayage_cli/cli.hpp"

int main(int argc, char** argv) { return balayage::cli::main_entry(argc, argv); }
