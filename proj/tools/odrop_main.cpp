#include "odrop/cli.hpp"

int main(int argc, char** argv) { return odrop::cli::run(argc, argv); }
