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

#include "ctlmap/hybrid.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ctlmap/error.hpp"

namespace ctlmap {

std::string_view to_string(Provenance p) noexcept
{
    switch (p) {
    case Provenance::Search: return "search";
    case Provenance::Cnn: return "cnn";
    case Provenance::Both: return "both";
    }
    return "search";
}

std::optional<Provenance> parse_provenance(std::string_view s) noexcept
{
    if (s == "search") return Provenance::Search;
    if (s == "cnn") return Provenance::Cnn;
    if (s == "both") return Provenance::Both;
    return std::nullopt;
}

std::string_view to_string(Backend b) noexcept
{
    switch (b) {
    case Backend::Search: return "search";
    case Backend::Cnn: return "cnn";
    case Backend::Hybrid: return "hybrid";
    }
    return "hybrid";
}

std::optional<Backend> parse_backend(std::string_view s) noexcept
{
    if (s == "search") return Backend::Search;
    if (s == "cnn") return Backend::Cnn;
    if (s == "hybrid") return Backend::Hybrid;
    return std::nullopt;
}

std::map<std::string, FusedScore> fuse(std::span<const SearchHit> search_hits,
                                       const std::map<std::string, double>& cnn_scores,
                                       const FusionConfig& config)
{
    std::map<std::string, FusedScore> out;
    for (const auto& hit : search_hits) {
        out[hit.label] = FusedScore{hit.confidence, Provenance::Search};
    }
    for (const auto& [label, score] : cnn_scores) {
        auto it = out.find(label);
        if (it == out.end()) {
            out.emplace(label, FusedScore{score, Provenance::Cnn});
            continue;
        }
        it->second.provenance = Provenance::Both;
        if (config.mode == FusionConfig::Mode::Max) {
            it->second.confidence = std::max(it->second.confidence, score);
        }
    }
    if (config.mode == FusionConfig::Mode::Weighted) {
        std::map<std::string, double> search_conf;
        for (const auto& hit : search_hits) {
            search_conf[hit.label] = hit.confidence;
        }
        for (auto& [label, fused] : out) {
            const auto s = search_conf.find(label);
            const auto c = cnn_scores.find(label);
            const double sv = s == search_conf.end() ? 0.0 : s->second;
            const double cv = c == cnn_scores.end() ? 0.0 : c->second;
            fused.confidence = config.alpha * sv + (1.0 - config.alpha) * cv;
        }
    }
    return out;
}

void MappingQuery::validate() const
{
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 1]");
    }
    if (max_hits == 0) {
        throw Error(ErrorCode::InvalidArgument, "max_hits must be at least 1");
    }
}

void from_json(const nlohmann::json& j, MappingQuery& q)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::ParseError, "mapping query must be a JSON object");
    }
    for (const char* key : {"text", "regulation_id"}) {
        if (!j.contains(key)) {
            throw Error(ErrorCode::MissingField, std::string("missing field '") + key + "'");
        }
    }
    try {
        q = MappingQuery{};
        j.at("text").get_to(q.text);
        j.at("regulation_id").get_to(q.regulation_id);
        if (j.contains("threshold")) {
            j.at("threshold").get_to(q.threshold);
        }
        if (j.contains("max_hits")) {
            const auto m = j.at("max_hits").get<std::int64_t>();
            if (m < 1) {
                throw Error(ErrorCode::InvalidArgument, "max_hits must be at least 1");
            }
            q.max_hits = static_cast<std::size_t>(m);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

void to_json(nlohmann::json& j, const MappingQuery& q)
{
    j = nlohmann::json{{"text", q.text},
                       {"regulation_id", q.regulation_id},
                       {"threshold", q.threshold},
                       {"max_hits", q.max_hits}};
}

void to_json(nlohmann::json& j, const MappingResult& r)
{
    auto results = nlohmann::json::array();
    for (const auto& e : r.entries) {
        results.push_back({{"control_id", e.control_id},
                           {"confidence", e.confidence},
                           {"provenance", to_string(e.provenance)}});
    }
    j = nlohmann::json{{"query", r.query.text},
                       {"regulation_id", r.query.regulation_id},
                       {"threshold", r.query.threshold},
                       {"max_hits", r.query.max_hits},
                       {"results", std::move(results)},
                       {"model_generation", r.model_generation},
                       {"index_generation", r.index_generation}};
}

void from_json(const nlohmann::json& j, MappingResult& r)
{
    r = MappingResult{};
    j.at("query").get_to(r.query.text);
    r.query.regulation_id = j.value("regulation_id", std::string{});
    j.at("threshold").get_to(r.query.threshold);
    r.query.max_hits = j.value("max_hits", std::size_t{10});
    for (const auto& e : j.at("results")) {
        const auto prov = parse_provenance(e.at("provenance").get<std::string>());
        if (!prov) {
            throw Error(ErrorCode::ParseError, "unknown provenance");
        }
        r.entries.push_back(MappingEntry{e.at("control_id").get<std::string>(),
                                         e.at("confidence").get<double>(), *prov});
    }
    j.at("model_generation").get_to(r.model_generation);
    j.at("index_generation").get_to(r.index_generation);
}

CandidateScores score_candidates(const TokenStream& query, const InvertedIndex& index,
                                 const CnnModel* model, std::size_t max_hits, double cnn_floor)
{
    CandidateScores out;
    out.search = index.search(query.tokens, max_hits);
    if (model != nullptr && !model->params.empty()) {
        out.cnn = predict_tokens(*model, query, cnn_floor);
    }
    return out;
}

std::map<std::string, FusedScore> backend_scores(const CandidateScores& candidates,
                                                 Backend backend, const FusionConfig& fusion)
{
    switch (backend) {
    case Backend::Search:
        return fuse(candidates.search, {}, fusion);
    case Backend::Cnn:
        return fuse({}, candidates.cnn, fusion);
    case Backend::Hybrid:
        break;
    }
    return fuse(candidates.search, candidates.cnn, fusion);
}

std::vector<MappingEntry> select(const std::map<std::string, FusedScore>& scores, double threshold)
{
    std::vector<MappingEntry> out;
    for (const auto& [label, fused] : scores) {
        if (fused.confidence >= threshold) {
            out.push_back(MappingEntry{label, fused.confidence, fused.provenance});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const MappingEntry& a, const MappingEntry& b) {
        if (a.confidence != b.confidence) {
            return a.confidence > b.confidence;
        }
        return a.control_id < b.control_id;
    });
    return out;
}

MappingResult map_check(const MappingQuery& query, const ControlCatalog& catalog,
                        const InvertedIndex& index, const CnnModel* model,
                        const StopwordList& stopwords, const MapperConfig& config)
{
    query.validate();
    if (query.regulation_id != catalog.regulation_id()) {
        throw Error(ErrorCode::UnknownRegulation, "regulation '" + query.regulation_id +
                                                      "' has not been ingested");
    }
    const auto tokens = preprocess(query.text, stopwords);
    const auto candidates = score_candidates(tokens, index, model, query.max_hits, config.cnn_floor);

    MappingResult result;
    result.query = query;
    result.entries = select(backend_scores(candidates, Backend::Hybrid, config.fusion),
                            query.threshold);
    result.index_generation = index.generation();
    result.model_generation = model != nullptr ? model->generation : 0;
    return result;
}

InvertedIndex build_mapping_index(const ControlCatalog& catalog,
                                  std::span<const TechspecCheck> checks,
                                  const StopwordList& stopwords, Bm25Params params)
{
    std::vector<DocumentInput> docs;
    docs.reserve(catalog.size() + checks.size());
    for (const auto& c : catalog.controls()) {
        docs.push_back(DocumentInput{"control:" + c.control_id,
                                     preprocess(c.title + " " + c.text, stopwords),
                                     {c.control_id}});
    }
    for (const auto& check : checks) {
        if (check.labels.empty()) {
            continue;
        }
        docs.push_back(DocumentInput{"check:" + check.check_id,
                                     preprocess(build_specification_text(check), stopwords),
                                     check.labels});
    }
    return InvertedIndex::build(std::move(docs), params);
}

std::vector<TrainingText> training_texts(std::span<const TechspecCheck> checks)
{
    std::vector<TrainingText> out;
    out.reserve(checks.size());
    for (const auto& check : checks) {
        out.push_back(TrainingText{build_specification_text(check), check.labels});
    }
    return out;
}

}  // namespace ctlmap
