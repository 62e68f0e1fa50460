#include "indiflow/cli.hpp"

int main(int argc, char** argv) { return indiflow::run_cli(argc, argv); }
