#include "cli_app.hpp"

int main(int argc, char** argv) { return specrec::cli::run_cli(argc, argv); }
