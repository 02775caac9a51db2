#include "mixaug/cli.hpp"

int main(int argc, char** argv) { return mixaug::cli::run(argc, argv); }
