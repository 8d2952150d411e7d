#include "dpdg/cli.hpp"

int main(int argc, char** argv) { return dpdg::run_cli(argc, argv); }
