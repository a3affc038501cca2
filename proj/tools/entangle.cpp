#include "entangle/cli.hpp"

int main(int argc, char** argv) { return entangle::run_cli(argc, argv); }
