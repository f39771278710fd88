#include "tpiece/cli.hpp"

int main(int argc, char** argv) { return tpiece::run_cli({argv + 1, argv + argc}); }
