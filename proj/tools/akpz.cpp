#include "akpz/runconfig.hpp"

int main(int argc, char** argv) { return akpz::cli_main(argc, argv); }
