#include "cli.hpp"

int main(int argc, char** argv) { return gwtree::cli::run(argc, argv); }
