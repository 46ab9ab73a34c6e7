// nelson_lab.cpp: command-line entry point
#include "nelson/cli.hpp"

int main(int argc, char** argv) { return nelson::run_cli(argc, argv); }
