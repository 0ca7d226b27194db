#include "shapshift/cli.hpp"

int main(int argc, char** argv) { return shapshift::run_cli(argc, argv); }
