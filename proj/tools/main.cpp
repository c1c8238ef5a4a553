#include "fsml/cli.hpp"

int main(int argc, char** argv) { return fsml::run_cli(argc, argv); }
