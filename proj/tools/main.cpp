#include "attntopo/cli.hpp"

int main(int argc, char** argv) { return attntopo::run_cli(argc, argv); }
