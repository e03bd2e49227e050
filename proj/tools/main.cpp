#include <iostream>

#include "dipolab/cli/app.hpp"

int main(int argc, char** argv) { return dipolab::cli::run(argc, argv, std::cout, std::cerr); }
