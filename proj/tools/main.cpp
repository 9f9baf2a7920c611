#include "bilevel/cli.hpp"

int main(int argc, char** argv) { return bilevel::cli::cli_main(argc, argv); }
