#include "mflaw/cli.hpp"

int main(int argc, char** argv) { return mflaw::cli::main(argc, argv); }
