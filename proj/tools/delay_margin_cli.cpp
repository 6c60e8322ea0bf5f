#include <delaymargin/cli.hpp>

int main(int argc, char** argv) { return delaymargin::cli::run(argc, argv); }
