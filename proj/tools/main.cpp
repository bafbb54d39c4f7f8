#include "cli.hpp"

int main(int argc, char** argv) { return sandshape::cli::run(argc, argv); }
