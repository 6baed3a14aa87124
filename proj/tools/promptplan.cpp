#include "promptplan/commands.hpp"

int main(int argc, char** argv) { return promptplan::run_cli(argc, argv); }
