#include "sgldr/cli.hpp"

int main(int argc, char** argv) { return sgldr::cli::main(argc, argv); }
