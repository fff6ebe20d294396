#include "occugrasp/commands.hpp"

int main(int argc, char** argv) { return occugrasp::run_cli(argc, argv); }
