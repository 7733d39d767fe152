#include "countx/cli/cli.hpp"
int main(int argc, char** argv) { return countx::cli::run(argc, argv); }
