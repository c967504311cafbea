#include "uwbdet/harness.hpp"

int main(int argc, char** argv) { return uwbdet::harness::cli(argc, argv); }
