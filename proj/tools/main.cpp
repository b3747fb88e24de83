#include "enkf/experiment.hpp"

int main(int argc, char** argv) { return enkf::cli_main(argc, argv); }
