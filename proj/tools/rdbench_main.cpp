#include "rdbench/cli.hpp"

int main(int argc, char** argv) { return rdbench::cli_main(argc, argv); }
