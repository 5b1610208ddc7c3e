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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctlmap/corpus.hpp"

namespace ctlmap {

/// Okapi BM25 with the Lucene defaults.
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Input to build_index / add_document.
struct DocumentInput {
    std::string doc_id;
    TokenStream tokens;
    std::vector<std::string> labels;
};

struct IndexedDocument {
    std::string doc_id;
    std::vector<std::string> labels;         // sorted, non-empty
    std::map<std::string, std::uint32_t> token_counts;
    std::uint32_t length = 0;                // sum of token_counts

    bool operator==(const IndexedDocument&) const = default;
};

struct SearchHit {
    std::string label;
    double relevance = 0.0;   // unbounded, >= 0
    double confidence = 0.0;  // relevance / max relevance in the result

    bool operator==(const SearchHit&) const = default;
};

/// In-memory inverted index over labelled documents. Every mutation batch bumps
/// `generation()`. Instances are plain values: copy one to derive a new
/// snapshot while readers keep using the old one.
class InvertedIndex {
public:
    struct Posting {
        std::uint32_t doc = 0;  // position in documents()
        std::uint32_t term_count = 0;

        bool operator==(const Posting&) const = default;
    };

    static constexpr std::uint32_t kFormatVersion = 1;

    InvertedIndex() = default;
    explicit InvertedIndex(Bm25Params params) : params_(params) {}

    /// Throws EmptyCorpus for zero documents and DuplicateDocId on a repeated id.
    static InvertedIndex build(std::vector<DocumentInput> docs, Bm25Params params = {});

    /// Throws DuplicateDocId.
    void add_document(DocumentInput doc);

    /// Throws UnknownDocId.
    double bm25_score(std::span<const std::string> query, const std::string& doc_id) const;

    /// Scores every document sharing a term with the query, keeps the best
    /// document per label, and normalizes by the top relevance. Throws
    /// EmptyIndex on an index without documents and InvalidArgument when
    /// max_hits is zero.
    std::vector<SearchHit> search(std::span<const std::string> query, std::size_t max_hits) const;

    std::size_t doc_count() const noexcept { return docs_.size(); }
    double avg_doc_len() const noexcept;
    std::uint64_t generation() const noexcept { return generation_; }
    void set_generation(std::uint64_t g) noexcept { generation_ = g; }
    const Bm25Params& params() const noexcept { return params_; }
    const std::vector<IndexedDocument>& documents() const noexcept { return docs_; }
    bool contains(const std::string& doc_id) const { return by_id_.count(doc_id) != 0; }

    /// Document frequency of `term`.
    std::size_t doc_freq(const std::string& term) const;
    double idf(const std::string& term) const;

    void save(std::ostream& out) const;
    static InvertedIndex load(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    bool operator==(const InvertedIndex& other) const;

private:
    void insert(DocumentInput doc);
    double term_weight(std::uint32_t term_count, std::uint32_t doc_len, double idf) const;

    Bm25Params params_;
    std::vector<IndexedDocument> docs_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::uint64_t total_len_ = 0;
    std::uint64_t generation_ = 0;
};

}  // namespace ctlmap
