#include "cli.hpp"

int main(int argc, char** argv) { return defhom::cli::run(argc, argv); }
