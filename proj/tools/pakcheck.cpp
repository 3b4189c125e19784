#include "pakcheck/cli.hpp"

int main(int argc, char** argv) { return pak::run_cli(argc, argv); }
