#include "mgq/cli.hpp"

int main(int argc, char** argv) { return mgq::cli::run(argc, argv); }
