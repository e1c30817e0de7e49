#include "cli.hpp"

int main(int argc, char** argv) { return levydyn::cli::run(argc, argv); }
