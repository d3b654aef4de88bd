// SPDX-License-Identifier: Apache-2.0
#include "flowdisagg/cli.hpp"

int main(int argc, char** argv) { return flowdisagg::run_cli(argc, argv); }
