// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace pegrl {

// Full CLI entry point: parses argv (without the program name), dispatches to
// the train/compare/variance/score pipelines, writes the run manifest and
// outputs under --out. Returns the process exit status: 0 on success, 1 on
// config or runtime errors, 2 on usage errors.
int run(const std::vector<std::string>& argv);

}  // namespace pegrl
