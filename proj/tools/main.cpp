#include "mmbeam/experiments.hpp"

int main(int argc, char** argv) { return mmbeam::cli_main(argc, argv); }
