// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pegrl/rng.hpp"
#include "pegrl/vocab.hpp"

namespace pegrl {

using TokenSeq = std::vector<int>;

// One unit of work: a source sequence, its gold target, and the per-token
// substitution cipher linking them (tgt[i] = cipher[src[i]]).
struct TaskInstance {
    std::uint64_t id = 0;
    TokenSeq src;
    TokenSeq tgt;
    std::vector<int> cipher;  // permutation over content tokens

    // Provenance, kept for serialization.
    std::uint64_t seed = 0;
    int vocab_size = 0;
};

// Draws a uniform source sequence and a uniform random permutation; the
// target follows from the cipher invariant.
TaskInstance make_cipher_instance(Rng& rng, const Vocab& vocab, int length);

// Convenience: derives the instance stream from (seed, index) and stamps the
// instance with that identity.
TaskInstance make_cipher_instance_seeded(std::uint64_t seed, std::uint64_t index,
                                         const Vocab& vocab, int length);

// Dataset builder: all instances of one seed share a single cipher (the
// "language pair"); source sequences vary per index. Train and eval sets
// built from the same seed therefore share the cipher.
std::vector<TaskInstance> make_instances(std::uint64_t seed, std::uint64_t first_index,
                                         int count, const Vocab& vocab, int length);

// Golden-file schema: {seed, vocab_size, length, src, tgt, cipher}.
std::string instance_to_json(const TaskInstance& inst);
TaskInstance instance_from_json(const std::string& json_text);

}  // namespace pegrl
