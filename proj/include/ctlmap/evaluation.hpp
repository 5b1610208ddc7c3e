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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctlmap/classifier.hpp"
#include "ctlmap/corpus.hpp"
#include "ctlmap/hybrid.hpp"

namespace ctlmap {

enum class Averaging { Micro, Macro };

struct EvalConfig {
    std::size_t k = 3;
    // Share of the data held out for testing. When <= 0 one of k folds is held
    // out instead.
    double test_fraction = 0.15;
    std::vector<double> thresholds{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::uint64_t seed = 7;
    std::size_t iterations = 5;
    Averaging averaging = Averaging::Micro;
    std::size_t max_hits = 10;

    /// Throws InvalidArgument.
    void validate() const;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const Prf&) const = default;
};

/// Set precision/recall/F1. Empty prediction with empty truth scores 1 for
/// precision and recall; empty prediction with non-empty truth scores 0
/// precision; empty truth scores recall 1.
Prf prf(std::span<const std::string> predicted, std::span<const std::string> truth);

/// Same conventions applied to pooled counts.
Prf prf_from_counts(std::size_t true_positive, std::size_t predicted, std::size_t actual);

struct MetricPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;         // evaluated examples
    double predicted_labels = 0.0;   // total predicted labels over the examples

    bool operator==(const MetricPoint&) const = default;
};

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded random partition of [0, n). Test size is round(test_fraction * n),
/// or n / k when test_fraction <= 0. Throws DatasetTooSmall when n < k or
/// either side would be empty.
FoldSplit split_folds(std::size_t n, const EvalConfig& config, std::uint64_t seed);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_folds(std::span<const T> data,
                                                      const EvalConfig& config,
                                                      std::uint64_t seed)
{
    const auto split = split_folds(data.size(), config, seed);
    std::pair<std::vector<T>, std::vector<T>> out;
    out.first.reserve(split.train.size());
    out.second.reserve(split.test.size());
    for (auto i : split.train) {
        out.first.push_back(data[i]);
    }
    for (auto i : split.test) {
        out.second.push_back(data[i]);
    }
    return out;
}

/// Backend outputs for one evaluation example, computed once and reused for
/// every backend and threshold.
struct ScoredExample {
    CandidateScores candidates;
    std::vector<std::string> truth;
};

std::vector<ScoredExample> score_examples(std::span<const TechspecCheck> checks,
                                          const InvertedIndex& index, const CnnModel* model,
                                          const StopwordList& stopwords, std::size_t max_hits,
                                          double cnn_floor = 0.01);

/// Metrics per threshold for one backend over already scored examples.
std::vector<MetricPoint> sweep_backend(std::span<const ScoredExample> examples, Backend backend,
                                       std::span<const double> thresholds,
                                       Averaging averaging = Averaging::Micro,
                                       const FusionConfig& fusion = {});

struct SweepRow {
    Backend backend = Backend::Hybrid;
    MetricPoint point;
};

struct SweepReport {
    std::vector<SweepRow> rows;  // thresholds ascending within each backend

    std::vector<MetricPoint> points(Backend backend) const;

    /// `threshold,backend,precision,recall,f1,support`, fixed six-decimal
    /// formatting so identical runs give identical bytes.
    void write_csv(std::ostream& out) const;
};

void to_json(nlohmann::json& j, const SweepReport& report);

/// Splits, builds the index and trains the classifier on the training side,
/// then evaluates the held-out side; repeated config.iterations times with
/// seeds seed + i (split) and train.seed + i (classifier), points averaged.
SweepReport threshold_sweep(std::span<const TechspecCheck> data, const ControlCatalog& catalog,
                            std::span<const Backend> backends, const EvalConfig& config,
                            const TrainConfig& train, const StopwordList& stopwords,
                            const MapperConfig& mapper = {});

struct FeedbackExperimentConfig {
    std::size_t y = 72;
    std::size_t iterations = 5;
    double threshold = 0.5;
    Backend backend = Backend::Hybrid;
    std::size_t max_hits = 10;
    Averaging averaging = Averaging::Micro;
};

struct FeedbackExperimentPoint {
    std::size_t iteration = 0;
    Prf metrics;
    std::size_t retrains = 0;
    std::uint64_t model_generation = 0;
    std::uint64_t index_generation = 0;
};

struct FeedbackExperimentResult {
    std::vector<FeedbackExperimentPoint> points;  // iteration 0 is the baseline
    std::size_t retrains = 0;

    /// `iteration,precision,recall,f1,retrains,model_generation`.
    void write_csv(std::ostream& out) const;
};

void to_json(nlohmann::json& j, const FeedbackExperimentResult& result);

/// Trains on `base_train`, evaluates `eval_set`, then feeds the pool through
/// the active learner y records at a time (the simulated expert accepts the
/// true labels and rejects every other label the system proposed),
/// re-evaluating after each batch. Throws PoolSizeMismatch unless the pool
/// holds exactly y * iterations checks.
FeedbackExperimentResult simulate_feedback_experiment(
    std::span<const TechspecCheck> base_train, std::span<const TechspecCheck> feedback_pool,
    std::span<const TechspecCheck> eval_set, const ControlCatalog& catalog,
    const FeedbackExperimentConfig& config, const TrainConfig& train,
    const StopwordList& stopwords, const MapperConfig& mapper = {});

}  // namespace ctlmap
