// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "hot/tools/cli.hpp"

int main(int argc, char** argv) { return hot::cli::run(argc, argv, std::cout, std::cerr); }
