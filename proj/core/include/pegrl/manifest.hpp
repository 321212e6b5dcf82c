// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pegrl {

// Reproducibility record written once per run, before any output artifact.
// The config snapshot plus seed and build id suffice to reproduce the run.
struct RunManifest {
    std::string subcommand;
    std::map<std::string, std::string> config_snapshot;
    std::uint64_t seed = 0;
    std::string started_at;   // ISO-8601 UTC
    std::string finished_at;  // empty until the run completes
    std::vector<std::string> artifacts;
    std::string build_id;

    std::string to_json() const;
};

std::string utc_timestamp_now();

// Writes manifest.json under out_dir (creating the directory if needed).
void write_manifest(const std::string& out_dir, const RunManifest& manifest);

}  // namespace pegrl
