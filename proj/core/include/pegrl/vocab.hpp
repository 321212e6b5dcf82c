// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace pegrl {

// Content tokens are 0..size-1; the end-of-sequence action is the extra id
// `size`, so every policy row has size+1 actions.
struct Vocab {
    int size = 0;

    explicit Vocab(int size_) : size(size_) {
        if (size < 2) throw std::invalid_argument("Vocab: size must be >= 2");
    }

    int eos() const { return size; }
    int num_actions() const { return size + 1; }
    bool is_content(int token) const { return token >= 0 && token < size; }
};

}  // namespace pegrl
