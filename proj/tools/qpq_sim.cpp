#include <qpq/harness/cli.hpp>

int main(int argc, char** argv) { return qpq::harness::cli_run(argc, argv); }
