#include "pucci/cli.hpp"

int main(int argc, char** argv) { return pucci::cli::main(argc, argv); }
