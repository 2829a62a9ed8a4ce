#include "snspd/cli.hpp"

int main(int argc, char** argv) { return snspd::cli::run(argc, argv); }
