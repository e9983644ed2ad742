#include "bandsel/cli.hpp"

int main(int argc, char** argv) { return bandsel::cli::run(argc, argv); }
