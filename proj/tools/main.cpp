#include "cli.hpp"

int main(int argc, char** argv) { return fairreg::cli::run(argc, argv); }
