#include "stssl/cli/cli.hpp"

int main(int argc, char** argv) { return stssl::cli::run(argc, argv); }
