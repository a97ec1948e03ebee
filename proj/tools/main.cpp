#include "sramsuc/cli.hpp"

int main(int argc, char** argv) { return sramsuc::cli::main(argc, argv); }
