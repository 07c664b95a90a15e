#include "iotid/cli.hpp"

int main(int argc, char** argv) { return iotid::cli::run(argc, argv); }
