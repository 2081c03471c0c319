#include "planloop/cli.hpp"

int main(int argc, char** argv) { return planloop::cli_main(argc, argv); }
