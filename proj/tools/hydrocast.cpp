#include "hydrocast/cli.hpp"

int main(int argc, char** argv) { return hydrocast::cli::run(argc, argv); }
