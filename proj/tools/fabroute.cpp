// SPDX-License-Identifier: Apache-2.0
#include "fabroute/cli.hpp"

int main(int argc, char **argv) { return fabroute::cli::main(argc, argv); }
