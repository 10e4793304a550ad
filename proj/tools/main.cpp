#include "cli.hpp"

int main(int argc, char** argv) { return fredkit::cli::run(argc, argv); }
