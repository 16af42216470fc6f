#include "cdrs/app/commands.hpp"

int main(int argc, char** argv) { return cdrs::app::run_cli(argc, argv); }
