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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctlmap/classifier.hpp"
#include "ctlmap/corpus.hpp"
#include "ctlmap/index.hpp"

namespace ctlmap {

enum class Provenance { Search, Cnn, Both };
std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> parse_provenance(std::string_view s) noexcept;

enum class Backend { Search, Cnn, Hybrid };
std::string_view to_string(Backend b) noexcept;
std::optional<Backend> parse_backend(std::string_view s) noexcept;

struct FusedScore {
    double confidence = 0.0;
    Provenance provenance = Provenance::Search;

    bool operator==(const FusedScore&) const = default;
};

struct FusionConfig {
    enum class Mode { Max, Weighted };
    Mode mode = Mode::Max;
    // Weighted mode only: alpha * search + (1 - alpha) * cnn, a missing side
    // counting as 0. Gives up the recall superset guarantee of Max.
    double alpha = 0.5;
};

/// Union of both label sets. In Max mode a label present in both takes the
/// larger confidence.
std::map<std::string, FusedScore> fuse(std::span<const SearchHit> search_hits,
                                       const std::map<std::string, double>& cnn_scores,
                                       const FusionConfig& config = {});

struct MappingQuery {
    std::string text;
    std::string regulation_id;
    double threshold = 0.5;
    std::size_t max_hits = 10;

    /// Throws InvalidArgument for a threshold outside [0, 1] or zero max_hits.
    void validate() const;
    bool operator==(const MappingQuery&) const = default;
};

struct MappingEntry {
    std::string control_id;
    double confidence = 0.0;
    Provenance provenance = Provenance::Search;

    bool operator==(const MappingEntry&) const = default;
};

struct MappingResult {
    MappingQuery query;
    std::vector<MappingEntry> entries;  // confidence desc, control_id asc
    std::uint64_t model_generation = 0;
    std::uint64_t index_generation = 0;

    bool operator==(const MappingResult&) const = default;
};

/// Query body: {text, regulation_id, threshold?, max_hits?}. Missing optional
/// fields keep their defaults. Throws MissingField or ParseError.
void from_json(const nlohmann::json& j, MappingQuery& q);
void to_json(nlohmann::json& j, const MappingQuery& q);

/// {query, regulation_id, threshold, max_hits, results: [{control_id,
/// confidence, provenance}], model_generation, index_generation}.
void to_json(nlohmann::json& j, const MappingResult& r);
void from_json(const nlohmann::json& j, MappingResult& r);

struct MapperConfig {
    FusionConfig fusion;
    double cnn_floor = 0.01;
};

/// Raw output of both backends for one query, before thresholding.
struct CandidateScores {
    std::vector<SearchHit> search;
    std::map<std::string, double> cnn;  // empty when no model is installed
};

CandidateScores score_candidates(const TokenStream& query, const InvertedIndex& index,
                                 const CnnModel* model, std::size_t max_hits,
                                 double cnn_floor = 0.01);

/// The confidence dictionary a backend reports for these candidates.
std::map<std::string, FusedScore> backend_scores(const CandidateScores& candidates,
                                                 Backend backend,
                                                 const FusionConfig& fusion = {});

/// Entries with confidence >= threshold, sorted by confidence then control id.
std::vector<MappingEntry> select(const std::map<std::string, FusedScore>& scores,
                                 double threshold);

/// Preprocess, search, classify, fuse, threshold. Without a model the result is
/// search-only. Throws UnknownRegulation when the query names a different
/// regulation than `catalog`, EmptyIndex, and InvalidArgument for a bad query.
MappingResult map_check(const MappingQuery& query, const ControlCatalog& catalog,
                        const InvertedIndex& index, const CnnModel* model,
                        const StopwordList& stopwords, const MapperConfig& config = {});

/// Search corpus for a regulation: one document per control (title and text,
/// labelled with its own id) plus one per labelled check (specification text,
/// labelled with the check's controls).
InvertedIndex build_mapping_index(const ControlCatalog& catalog,
                                  std::span<const TechspecCheck> checks,
                                  const StopwordList& stopwords, Bm25Params params = {});

/// Specification text and labels of every check, in order.
std::vector<TrainingText> training_texts(std::span<const TechspecCheck> checks);

}  // namespace ctlmap
