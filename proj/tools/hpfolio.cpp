#include "hpfolio/cli.hpp"

int main(int argc, char** argv) { return hpfolio::cli::dispatch(argc, argv); }
