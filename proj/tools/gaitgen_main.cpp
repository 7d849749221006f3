#include "gaitgen/cli.hpp"

int main(int argc, char** argv) { return gaitgen::cli::run(argc, argv); }
