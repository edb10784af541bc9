#include "pdgm/cli/cli.hpp"

int main(int argc, char** argv) { return pdgm::cli::run(argc, argv); }
