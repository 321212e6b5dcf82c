// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/task.hpp"

#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pegrl {

TaskInstance make_cipher_instance(Rng& rng, const Vocab& vocab, int length) {
    if (length < 1) throw std::invalid_argument("make_cipher_instance: length must be >= 1");

    TaskInstance inst;
    inst.vocab_size = vocab.size;
    inst.src.resize(static_cast<std::size_t>(length));
    for (auto& t : inst.src) t = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(vocab.size)));

    // Fisher-Yates over the content tokens.
    inst.cipher.resize(static_cast<std::size_t>(vocab.size));
    std::iota(inst.cipher.begin(), inst.cipher.end(), 0);
    for (int i = vocab.size - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(i + 1)));
        std::swap(inst.cipher[static_cast<std::size_t>(i)], inst.cipher[static_cast<std::size_t>(j)]);
    }

    inst.tgt.resize(inst.src.size());
    for (std::size_t k = 0; k < inst.src.size(); ++k)
        inst.tgt[k] = inst.cipher[static_cast<std::size_t>(inst.src[k])];
    return inst;
}

TaskInstance make_cipher_instance_seeded(std::uint64_t seed, std::uint64_t index,
                                         const Vocab& vocab, int length) {
    Rng rng(derive_stream(seed, {stream_tag::kInstance, index}));
    TaskInstance inst = make_cipher_instance(rng, vocab, length);
    inst.id = index;
    inst.seed = seed;
    return inst;
}

std::vector<TaskInstance> make_instances(std::uint64_t seed, std::uint64_t first_index, int count,
                                         const Vocab& vocab, int length) {
    // One cipher per seed: the cipher plays the role of the language pair, so
    // every instance in a dataset (train and held-out alike) shares it and
    // only the source sequences vary.
    Rng cipher_rng(derive_stream(seed, {stream_tag::kInstance, 0xc1a5e7ULL}));
    std::vector<int> cipher(static_cast<std::size_t>(vocab.size));
    std::iota(cipher.begin(), cipher.end(), 0);
    for (int i = vocab.size - 1; i > 0; --i) {
        const int j = static_cast<int>(cipher_rng.next_below(static_cast<std::uint32_t>(i + 1)));
        std::swap(cipher[static_cast<std::size_t>(i)], cipher[static_cast<std::size_t>(j)]);
    }

    std::vector<TaskInstance> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const std::uint64_t index = first_index + static_cast<std::uint64_t>(k);
        Rng rng(derive_stream(seed, {stream_tag::kInstance, index}));
        TaskInstance inst;
        inst.id = index;
        inst.seed = seed;
        inst.vocab_size = vocab.size;
        inst.cipher = cipher;
        inst.src.resize(static_cast<std::size_t>(length));
        for (auto& t : inst.src)
            t = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(vocab.size)));
        inst.tgt.resize(inst.src.size());
        for (std::size_t i = 0; i < inst.src.size(); ++i)
            inst.tgt[i] = cipher[static_cast<std::size_t>(inst.src[i])];
        out.push_back(std::move(inst));
    }
    return out;
}

std::string instance_to_json(const TaskInstance& inst) {
    nlohmann::ordered_json j;
    j["seed"] = inst.seed;
    j["vocab_size"] = inst.vocab_size;
    j["length"] = inst.src.size();
    j["src"] = inst.src;
    j["tgt"] = inst.tgt;
    j["cipher"] = inst.cipher;
    return j.dump();
}

TaskInstance instance_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    TaskInstance inst;
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.vocab_size = j.at("vocab_size").get<int>();
    inst.src = j.at("src").get<TokenSeq>();
    inst.tgt = j.at("tgt").get<TokenSeq>();
    inst.cipher = j.at("cipher").get<std::vector<int>>();
    if (inst.src.size() != inst.tgt.size())
        throw std::invalid_argument("instance_from_json: src/tgt length mismatch");
    for (std::size_t k = 0; k < inst.src.size(); ++k) {
        if (inst.tgt[k] != inst.cipher.at(static_cast<std::size_t>(inst.src[k])))
            throw std::invalid_argument("instance_from_json: cipher invariant violated");
    }
    return inst;
}

}  // namespace pegrl
