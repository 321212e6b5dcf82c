// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include "pegrl/runner.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return pegrl::run(args);
}
