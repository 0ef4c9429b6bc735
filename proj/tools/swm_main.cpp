#include "swm/cli.hpp"

int main(int argc, char** argv) { return swm::cli_main(argc, argv); }
