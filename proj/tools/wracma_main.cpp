#include "wracma/cli.hpp"

int main(int argc, char** argv) { return wracma::cli_main(argc, argv); }
