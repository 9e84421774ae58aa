// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return graft::run_cli(argc, argv, std::cout, std::cerr); }
