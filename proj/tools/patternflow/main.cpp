#include "patternflow/cli.hpp"

int main(int argc, char** argv) { return patternflow::cli_main(argc, argv); }
