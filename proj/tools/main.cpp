// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "analogic/cli.hpp"

int main(int argc, char** argv) { return analogic::run_cli(argc, argv, std::cout, std::cerr); }
