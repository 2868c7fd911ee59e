#include "ptqm/cli.hpp"

int main(int argc, char** argv) { return ptqm::cli::run(argc, argv); }
