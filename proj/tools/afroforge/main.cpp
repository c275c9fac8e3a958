#include "cli.hpp"

int main(int argc, char** argv) { return afro::cli::run(argc, argv); }
