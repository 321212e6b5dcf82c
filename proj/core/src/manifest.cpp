// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/manifest.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pegrl {

std::string utc_timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["build"] = build_id;
    j["started_at"] = started_at;
    if (finished_at.empty())
        j["finished_at"] = nullptr;
    else
        j["finished_at"] = finished_at;
    j["config"] = config_snapshot;
    j["artifacts"] = artifacts;
    return j.dump(2);
}

void write_manifest(const std::string& out_dir, const RunManifest& manifest) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "manifest.json";
    std::ofstream file(path);
    if (!file) throw std::runtime_error("manifest: cannot write '" + path.string() + "'");
    file << manifest.to_json() << '\n';
}

}  // namespace pegrl
