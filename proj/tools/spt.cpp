#include "spt/cli.hpp"

int main(int argc, char** argv) { return spt::cli::main_entry(argc, argv); }
