#include "coopreg/cli.hpp"

int main(int argc, char** argv) { return coopreg::run_cli(argc, argv); }
