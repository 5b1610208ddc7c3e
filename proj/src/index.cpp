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

#include "ctlmap/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ctlmap/binary_io.hpp"
#include "ctlmap/error.hpp"

namespace ctlmap {

namespace {
constexpr char kIndexMagic[8] = {'C', 'T', 'L', 'M', 'I', 'D', 'X', '\0'};
}  // namespace

InvertedIndex InvertedIndex::build(std::vector<DocumentInput> docs, Bm25Params params)
{
    if (docs.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "cannot build an index from zero documents");
    }
    InvertedIndex index(params);
    for (auto& d : docs) {
        index.insert(std::move(d));
    }
    index.generation_ = 1;
    return index;
}

void InvertedIndex::add_document(DocumentInput doc)
{
    insert(std::move(doc));
    ++generation_;
}

void InvertedIndex::insert(DocumentInput doc)
{
    if (by_id_.count(doc.doc_id) != 0) {
        throw Error(ErrorCode::DuplicateDocId, "document '" + doc.doc_id + "' already indexed");
    }
    std::sort(doc.labels.begin(), doc.labels.end());
    doc.labels.erase(std::unique(doc.labels.begin(), doc.labels.end()), doc.labels.end());
    if (doc.labels.empty()) {
        throw Error(ErrorCode::InvalidArgument, "document '" + doc.doc_id + "' has no labels");
    }

    IndexedDocument stored;
    stored.doc_id = doc.doc_id;
    stored.labels = std::move(doc.labels);
    for (const auto& t : doc.tokens.tokens) {
        ++stored.token_counts[t];
    }
    stored.length = static_cast<std::uint32_t>(doc.tokens.tokens.size());

    const auto pos = static_cast<std::uint32_t>(docs_.size());
    for (const auto& [term, count] : stored.token_counts) {
        postings_[term].push_back(Posting{pos, count});
    }
    total_len_ += stored.length;
    by_id_.emplace(stored.doc_id, pos);
    docs_.push_back(std::move(stored));
}

double InvertedIndex::avg_doc_len() const noexcept
{
    return docs_.empty() ? 0.0 : static_cast<double>(total_len_) / static_cast<double>(docs_.size());
}

std::size_t InvertedIndex::doc_freq(const std::string& term) const
{
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

double InvertedIndex::idf(const std::string& term) const
{
    const auto n = static_cast<double>(docs_.size());
    const auto df = static_cast<double>(doc_freq(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double InvertedIndex::term_weight(std::uint32_t term_count, std::uint32_t doc_len, double idf) const
{
    const double tf = term_count;
    const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_len) / avg_doc_len();
    return idf * tf * (params_.k1 + 1.0) / (tf + params_.k1 * norm);
}

double InvertedIndex::bm25_score(std::span<const std::string> query, const std::string& doc_id) const
{
    auto it = by_id_.find(doc_id);
    if (it == by_id_.end()) {
        throw Error(ErrorCode::UnknownDocId, doc_id);
    }
    const auto& doc = docs_[it->second];
    double score = 0.0;
    for (const auto& term : query) {
        auto tc = doc.token_counts.find(term);
        if (tc == doc.token_counts.end()) {
            continue;
        }
        score += term_weight(tc->second, doc.length, idf(term));
    }
    return score;
}

std::vector<SearchHit> InvertedIndex::search(std::span<const std::string> query,
                                             std::size_t max_hits) const
{
    if (docs_.empty()) {
        throw Error(ErrorCode::EmptyIndex, "index holds no documents");
    }
    if (max_hits == 0) {
        throw Error(ErrorCode::InvalidArgument, "max_hits must be at least 1");
    }

    // Accumulate in query-term order so scores agree bit for bit with
    // bm25_score().
    std::vector<double> acc(docs_.size(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& term : query) {
        auto it = postings_.find(term);
        if (it == postings_.end()) {
            continue;
        }
        const double w = idf(term);
        for (const auto& p : it->second) {
            if (acc[p.doc] == 0.0) {
                touched.push_back(p.doc);
            }
            acc[p.doc] += term_weight(p.term_count, docs_[p.doc].length, w);
        }
    }

    std::unordered_map<std::string, double> best;
    for (auto d : touched) {
        const double score = acc[d];
        if (score <= 0.0) {
            continue;
        }
        for (const auto& label : docs_[d].labels) {
            auto [slot, inserted] = best.emplace(label, score);
            if (!inserted && score > slot->second) {
                slot->second = score;
            }
        }
    }

    std::vector<SearchHit> hits;
    hits.reserve(best.size());
    for (auto& [label, relevance] : best) {
        hits.push_back(SearchHit{label, relevance, 0.0});
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.relevance != b.relevance) {
            return a.relevance > b.relevance;
        }
        return a.label < b.label;
    });
    if (hits.size() > max_hits) {
        hits.resize(max_hits);
    }
    if (!hits.empty()) {
        const double top = hits.front().relevance;
        for (auto& h : hits) {
            h.confidence = h.relevance / top;
        }
        hits.front().confidence = 1.0;
    }
    return hits;
}

// Persistence ------------------------------------------------------------------
//
// magic[8] | u32 version | u64 generation | u64 doc_count | f64 avg_doc_len |
// f64 k1 | f64 b | documents | u64 term_count | postings (sorted by term)

void InvertedIndex::save(std::ostream& out) const
{
    bin::Writer w(out);
    w.bytes(kIndexMagic, sizeof kIndexMagic);
    w.u32(kFormatVersion);
    w.u64(generation_);
    w.u64(docs_.size());
    w.f64(avg_doc_len());
    w.f64(params_.k1);
    w.f64(params_.b);
    for (const auto& d : docs_) {
        w.str(d.doc_id);
        w.u64(d.labels.size());
        for (const auto& l : d.labels) {
            w.str(l);
        }
        w.u64(d.token_counts.size());
        for (const auto& [term, count] : d.token_counts) {
            w.str(term);
            w.u32(count);
        }
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, list] : postings_) {
        terms.push_back(&term);
    }
    std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
    w.u64(terms.size());
    for (const auto* term : terms) {
        const auto& list = postings_.at(*term);
        w.str(*term);
        w.u64(list.size());
        for (const auto& p : list) {
            w.u32(p.doc);
            w.u32(p.term_count);
        }
    }
    w.check();
}

InvertedIndex InvertedIndex::load(std::istream& in)
{
    bin::Reader r(in);
    char magic[sizeof kIndexMagic];
    r.bytes(magic, sizeof magic);
    if (!std::equal(std::begin(magic), std::end(magic), std::begin(kIndexMagic))) {
        throw Error(ErrorCode::ParseError, "not an index file");
    }
    const auto version = r.u32();
    if (version != kFormatVersion) {
        throw Error(ErrorCode::ParseError, "unsupported index format version " +
                                               std::to_string(version));
    }
    const auto generation = r.u64();
    const auto doc_count = r.u64();
    const double stored_avg = r.f64();
    Bm25Params params;
    params.k1 = r.f64();
    params.b = r.f64();

    InvertedIndex index(params);
    for (std::uint64_t i = 0; i < doc_count; ++i) {
        DocumentInput d;
        d.doc_id = r.str();
        const auto nl = r.u64();
        for (std::uint64_t k = 0; k < nl; ++k) {
            d.labels.push_back(r.str());
        }
        const auto nt = r.u64();
        for (std::uint64_t k = 0; k < nt; ++k) {
            auto term = r.str();
            const auto count = r.u32();
            d.tokens.tokens.insert(d.tokens.tokens.end(), count, term);
        }
        index.insert(std::move(d));
    }
    index.generation_ = generation;

    // The postings section is redundant with the documents; verify it.
    const auto term_count = r.u64();
    if (term_count != index.postings_.size()) {
        throw Error(ErrorCode::ParseError, "index postings do not match documents");
    }
    for (std::uint64_t t = 0; t < term_count; ++t) {
        const auto term = r.str();
        const auto n = r.u64();
        auto it = index.postings_.find(term);
        if (it == index.postings_.end() || it->second.size() != n) {
            throw Error(ErrorCode::ParseError, "index postings for '" + term + "' are inconsistent");
        }
        for (std::uint64_t k = 0; k < n; ++k) {
            Posting p{r.u32(), 0};
            p.term_count = r.u32();
            if (!(p == it->second[k])) {
                throw Error(ErrorCode::ParseError, "index postings for '" + term +
                                                       "' are inconsistent");
            }
        }
    }
    if (index.avg_doc_len() != stored_avg) {
        throw Error(ErrorCode::ParseError, "index header avg_doc_len is inconsistent");
    }
    return index;
}

void InvertedIndex::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    save(out);
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    return load(in);
}

bool InvertedIndex::operator==(const InvertedIndex& other) const
{
    return params_.k1 == other.params_.k1 && params_.b == other.params_.b &&
           generation_ == other.generation_ && docs_ == other.docs_ &&
           postings_ == other.postings_ && total_len_ == other.total_len_;
}

}  // namespace ctlmap
