// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "matrixflow/cli.hpp"

int main(int argc, char** argv) { return matrixflow::run_cli(argc, argv, std::cout, std::cerr); }
