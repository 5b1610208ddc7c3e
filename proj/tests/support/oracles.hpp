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

// Reference implementations written directly from the scoring and network
// definitions, sharing no code with the library. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ctlmap::oracle {

struct Doc {
    std::string id;
    std::vector<std::string> tokens;
    std::vector<std::string> labels;
};

/// BM25 of every document against `query`, looping over all terms and
/// documents. Repeated query terms contribute once per occurrence.
inline std::vector<double> bm25_all(const std::vector<Doc>& docs,
                                    const std::vector<std::string>& query, double k1 = 1.2,
                                    double b = 0.75)
{
    const double n = static_cast<double>(docs.size());
    double total_len = 0.0;
    for (const auto& d : docs) {
        total_len += static_cast<double>(d.tokens.size());
    }
    const double avgdl = total_len / n;
    std::vector<double> scores(docs.size(), 0.0);
    for (const auto& term : query) {
        double df = 0.0;
        for (const auto& d : docs) {
            if (std::find(d.tokens.begin(), d.tokens.end(), term) != d.tokens.end()) {
                df += 1.0;
            }
        }
        if (df == 0.0) {
            continue;
        }
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (std::size_t i = 0; i < docs.size(); ++i) {
            const double tf = static_cast<double>(
                std::count(docs[i].tokens.begin(), docs[i].tokens.end(), term));
            if (tf == 0.0) {
                continue;
            }
            const double dl = static_cast<double>(docs[i].tokens.size());
            scores[i] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
    }
    return scores;
}

struct LabelHit {
    std::string label;
    double relevance = 0.0;
};

/// Best document score per label, relevance descending then label ascending,
/// only documents sharing a term with the query.
inline std::vector<LabelHit> search(const std::vector<Doc>& docs,
                                    const std::vector<std::string>& query, std::size_t max_hits)
{
    const auto scores = bm25_all(docs, query);
    std::map<std::string, double> best;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        bool overlap = false;
        for (const auto& t : query) {
            if (std::find(docs[i].tokens.begin(), docs[i].tokens.end(), t) !=
                docs[i].tokens.end()) {
                overlap = true;
            }
        }
        if (!overlap) {
            continue;
        }
        for (const auto& l : docs[i].labels) {
            auto it = best.find(l);
            if (it == best.end() || scores[i] > it->second) {
                best[l] = scores[i];
            }
        }
    }
    std::vector<LabelHit> hits;
    for (const auto& [l, r] : best) {
        hits.push_back({l, r});
    }
    std::sort(hits.begin(), hits.end(), [](const LabelHit& a, const LabelHit& b) {
        if (a.relevance != b.relevance) {
            return a.relevance > b.relevance;
        }
        return a.label < b.label;
    });
    if (hits.size() > max_hits) {
        hits.resize(max_hits);
    }
    return hits;
}

/// Random corpus over a small vocabulary so terms repeat across documents.
inline std::vector<Doc> random_corpus(std::mt19937_64& rng, std::size_t max_docs = 100)
{
    std::uniform_int_distribution<std::size_t> n_docs(1, max_docs);
    std::uniform_int_distribution<std::size_t> vocab_size(5, 60);
    const std::size_t v = vocab_size(rng);
    std::uniform_int_distribution<std::size_t> word(0, v - 1);
    std::uniform_int_distribution<std::size_t> len(1, 30);
    std::uniform_int_distribution<std::size_t> n_labels(1, 3);
    std::uniform_int_distribution<std::size_t> label(0, 24);
    std::vector<Doc> docs(n_docs(rng));
    for (std::size_t i = 0; i < docs.size(); ++i) {
        docs[i].id = "doc-" + std::to_string(i);
        const std::size_t l = len(rng);
        for (std::size_t j = 0; j < l; ++j) {
            docs[i].tokens.push_back("w" + std::to_string(word(rng)));
        }
        std::set<std::string> labels;
        const std::size_t nl = n_labels(rng);
        for (std::size_t j = 0; j < nl; ++j) {
            labels.insert("C-" + std::to_string(label(rng)));
        }
        docs[i].labels.assign(labels.begin(), labels.end());
    }
    return docs;
}

inline std::vector<std::string> random_query(std::mt19937_64& rng, std::size_t vocab = 70)
{
    std::uniform_int_distribution<std::size_t> len(1, 6);
    std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
    std::vector<std::string> q;
    const std::size_t l = len(rng);
    for (std::size_t j = 0; j < l; ++j) {
        q.push_back("w" + std::to_string(word(rng)));
    }
    return q;
}

/// Network dimensions plus the flat parameter layout: embeddings V x d, then
/// per width k a filter bank nf x (w_k d) followed by nf biases, then output
/// weights L x (|W| nf) and L biases.
struct NetDims {
    std::size_t vocab = 0;
    std::size_t d = 0;
    std::vector<std::size_t> widths;
    std::size_t nf = 0;
    std::size_t labels = 0;
};

/// Scores by explicit loops. Real tokens are those before the first pad id
/// (1). A window starts at every real position where it fits; a sequence
/// shorter than the width gets one window at 0 with zero vectors past the end.
/// Pooled features are max(0, best window).
inline std::vector<double> forward(const NetDims& n, const std::vector<double>& p,
                                   const std::vector<std::int32_t>& ids)
{
    std::size_t len = 0;
    while (len < ids.size() && ids[len] != 1) {
        ++len;
    }
    auto embed = [&](std::size_t pos, std::size_t e) -> double {
        if (pos >= len) {
            return 0.0;
        }
        return p[static_cast<std::size_t>(ids[pos]) * n.d + e];
    };
    std::vector<double> pooled;
    std::size_t off = n.vocab * n.d;
    for (std::size_t w : n.widths) {
        const std::size_t bias_off = off + n.nf * w * n.d;
        const std::size_t windows = len >= w ? len - w + 1 : 1;
        for (std::size_t f = 0; f < n.nf; ++f) {
            double best = -1e300;
            for (std::size_t s = 0; s < windows; ++s) {
                double v = p[bias_off + f];
                for (std::size_t j = 0; j < w; ++j) {
                    for (std::size_t e = 0; e < n.d; ++e) {
                        v += p[off + f * w * n.d + j * n.d + e] * embed(s + j, e);
                    }
                }
                best = std::max(best, v);
            }
            pooled.push_back(std::max(0.0, best));
        }
        off = bias_off + n.nf;
    }
    const std::size_t feats = pooled.size();
    const std::size_t out_bias = off + n.labels * feats;
    std::vector<double> scores;
    for (std::size_t l = 0; l < n.labels; ++l) {
        double z = p[out_bias + l];
        for (std::size_t i = 0; i < feats; ++i) {
            z += p[off + l * feats + i] * pooled[i];
        }
        scores.push_back(1.0 / (1.0 + std::exp(-z)));
    }
    return scores;
}

}  // namespace ctlmap::oracle

namespace ctlmap::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "ctlmap")
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace ctlmap::testing
