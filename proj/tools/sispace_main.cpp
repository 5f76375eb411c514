#include "sispace/cli.hpp"

int main(int argc, char** argv) { return sispace::cli::run(argc, argv); }
