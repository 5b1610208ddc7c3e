// Copyright 2026 The ctlmap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Seeded synthetic corpora with the same schema as real STIG checks and
// regulation catalogs. Control-specific vocabulary is made of generated
// pseudo-words; the four Table 1 style examples use their real wording.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ctlmap/corpus.hpp"

namespace ctlmap::fixtures {

inline constexpr const char* kNistRegulation = "NIST-800-53-v4";
inline constexpr const char* kHipaaRegulation = "HIPAA-164";

struct FixtureConfig {
    std::uint64_t seed = 20240601;
    std::size_t controls_per_family = 11;
    std::size_t stig_checks = 2000;
    std::size_t hipaa_checks = 240;
    std::size_t operator_controls = 60;
    std::size_t operator_pool = 360;
    std::size_t operator_eval = 240;
};

struct FixtureSet {
    std::vector<RegulationControl> nist;
    std::vector<RegulationControl> hipaa;
    std::vector<TechspecCheck> stig_nist;      // labelled against nist
    std::vector<TechspecCheck> stig_hipaa;     // labelled against hipaa
    std::vector<TechspecCheck> operator_pool;  // feedback pool, nist labels
    std::vector<TechspecCheck> operator_eval;  // held-out operator rules, nist labels
};

FixtureSet generate(const FixtureConfig& config = {});

/// Writes nist_catalog.jsonl, hipaa_catalog.jsonl, stig_nist.jsonl,
/// stig_hipaa.jsonl, operator_pool.jsonl and operator_eval.jsonl.
void write(const FixtureSet& set, const std::filesystem::path& dir);

/// Reads a directory produced by write().
FixtureSet load(const std::filesystem::path& dir);

}  // namespace ctlmap::fixtures
