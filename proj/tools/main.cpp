#include "scalelaw/cli.hpp"

int main(int argc, char** argv) { return scalelaw::run_command(argc, argv); }
