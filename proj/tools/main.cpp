#include "avieb/cli.hpp"

int main(int argc, char** argv) { return avieb::cli::main(argc, argv); }
