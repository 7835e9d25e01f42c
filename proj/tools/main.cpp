#include "cli.hpp"

int main(int argc, char** argv) { return simecs::cli::run(argc, argv); }
