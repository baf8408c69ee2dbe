#include "anisopf/io.hpp"

int main(int argc, char** argv) { return anisopf::cli_main(argc, argv); }
