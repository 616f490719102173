#include "decofringe/cli.hpp"

int main(int argc, char** argv) { return decofringe::cli::main_entry(argc, argv); }
