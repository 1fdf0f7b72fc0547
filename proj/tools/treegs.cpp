#include "treegs/cli.hpp"

int main(int argc, char** argv) { return treegs::cli::run(argc, argv); }
