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

#include "ctlmap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "ctlmap/active_learning.hpp"
#include "ctlmap/error.hpp"

namespace ctlmap {

namespace {

double f1_of(double p, double r)
{
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::vector<std::string> label_set(const std::vector<MappingEntry>& entries)
{
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        out.push_back(e.control_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t intersection_size(std::span<const std::string> a, std::span<const std::string> b)
{
    std::vector<std::string> sa(a.begin(), a.end());
    std::vector<std::string> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
    std::sort(sb.begin(), sb.end());
    sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
    std::size_t n = 0;
    auto i = sa.begin();
    auto j = sb.begin();
    while (i != sa.end() && j != sb.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

std::size_t unique_count(std::span<const std::string> v)
{
    std::vector<std::string> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
}

// Accumulates either pooled counts (micro) or per-example scores (macro).
class PrfAccumulator {
public:
    explicit PrfAccumulator(Averaging averaging) : averaging_(averaging) {}

    void add(std::span<const std::string> predicted, std::span<const std::string> truth)
    {
        const auto tp = intersection_size(predicted, truth);
        const auto np = unique_count(predicted);
        const auto nt = unique_count(truth);
        tp_ += tp;
        pred_ += np;
        actual_ += nt;
        const auto one = prf_from_counts(tp, np, nt);
        p_sum_ += one.precision;
        r_sum_ += one.recall;
        ++n_;
    }

    Prf result() const
    {
        if (averaging_ == Averaging::Micro) {
            return prf_from_counts(tp_, pred_, actual_);
        }
        if (n_ == 0) {
            return Prf{1.0, 1.0, 1.0};
        }
        const double p = p_sum_ / static_cast<double>(n_);
        const double r = r_sum_ / static_cast<double>(n_);
        return Prf{p, r, f1_of(p, r)};
    }

    std::size_t examples() const noexcept { return n_; }
    std::size_t predicted() const noexcept { return pred_; }

private:
    Averaging averaging_;
    std::size_t tp_ = 0;
    std::size_t pred_ = 0;
    std::size_t actual_ = 0;
    double p_sum_ = 0.0;
    double r_sum_ = 0.0;
    std::size_t n_ = 0;
};

Prf evaluate(const ActiveLearner& learner, std::span<const TechspecCheck> eval_set,
             const FeedbackExperimentConfig& config, const StopwordList& stopwords,
             const MapperConfig& mapper)
{
    const auto examples = score_examples(eval_set, *learner.index(), learner.model().get(),
                                         stopwords, config.max_hits, mapper.cnn_floor);
    PrfAccumulator acc(config.averaging);
    for (const auto& ex : examples) {
        const auto predicted = label_set(
            select(backend_scores(ex.candidates, config.backend, mapper.fusion), config.threshold));
        acc.add(predicted, ex.truth);
    }
    return acc.result();
}

}  // namespace

void EvalConfig::validate() const
{
    if (k < 2) {
        throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
    }
    if (!(test_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "test_fraction must be below 1");
    }
    if (thresholds.empty()) {
        throw Error(ErrorCode::InvalidArgument, "at least one threshold is required");
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "thresholds must lie in [0, 1]");
        }
        if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "thresholds must be strictly increasing");
        }
    }
    if (iterations == 0) {
        throw Error(ErrorCode::InvalidArgument, "iterations must be at least 1");
    }
    if (max_hits == 0) {
        throw Error(ErrorCode::InvalidArgument, "max_hits must be at least 1");
    }
}

Prf prf_from_counts(std::size_t tp, std::size_t predicted, std::size_t actual)
{
    Prf out;
    if (predicted == 0) {
        out.precision = actual == 0 ? 1.0 : 0.0;
    } else {
        out.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    }
    out.recall = actual == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(actual);
    out.f1 = f1_of(out.precision, out.recall);
    return out;
}

Prf prf(std::span<const std::string> predicted, std::span<const std::string> truth)
{
    return prf_from_counts(intersection_size(predicted, truth), unique_count(predicted),
                           unique_count(truth));
}

FoldSplit split_folds(std::size_t n, const EvalConfig& config, std::uint64_t seed)
{
    if (config.k < 2) {
        throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
    }
    if (n < config.k) {
        throw Error(ErrorCode::DatasetTooSmall, std::to_string(n) + " examples for k = " +
                                                    std::to_string(config.k));
    }
    const std::size_t test_size =
        config.test_fraction > 0.0
            ? static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)))
            : n / config.k;
    if (test_size == 0 || test_size >= n) {
        throw Error(ErrorCode::DatasetTooSmall, "split of " + std::to_string(n) +
                                                    " examples leaves one side empty");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(order[i], order[pick(rng)]);
    }
    FoldSplit out;
    out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
    out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

std::vector<ScoredExample> score_examples(std::span<const TechspecCheck> checks,
                                          const InvertedIndex& index, const CnnModel* model,
                                          const StopwordList& stopwords, std::size_t max_hits,
                                          double cnn_floor)
{
    std::vector<ScoredExample> out;
    out.reserve(checks.size());
    for (const auto& check : checks) {
        const auto tokens = preprocess(build_specification_text(check), stopwords);
        out.push_back(ScoredExample{score_candidates(tokens, index, model, max_hits, cnn_floor),
                                    check.labels});
    }
    return out;
}

std::vector<MetricPoint> sweep_backend(std::span<const ScoredExample> examples, Backend backend,
                                       std::span<const double> thresholds, Averaging averaging,
                                       const FusionConfig& fusion)
{
    std::vector<std::map<std::string, FusedScore>> scores;
    scores.reserve(examples.size());
    for (const auto& ex : examples) {
        scores.push_back(backend_scores(ex.candidates, backend, fusion));
    }
    std::vector<MetricPoint> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        PrfAccumulator acc(averaging);
        for (std::size_t i = 0; i < examples.size(); ++i) {
            acc.add(label_set(select(scores[i], t)), examples[i].truth);
        }
        const auto m = acc.result();
        out.push_back(MetricPoint{t, m.precision, m.recall, m.f1, acc.examples(),
                                  static_cast<double>(acc.predicted())});
    }
    return out;
}

std::vector<MetricPoint> SweepReport::points(Backend backend) const
{
    std::vector<MetricPoint> out;
    for (const auto& row : rows) {
        if (row.backend == backend) {
            out.push_back(row.point);
        }
    }
    return out;
}

void SweepReport::write_csv(std::ostream& out) const
{
    out << "threshold,backend,precision,recall,f1,support\n";
    for (const auto& row : rows) {
        out << fixed6(row.point.threshold) << ',' << to_string(row.backend) << ','
            << fixed6(row.point.precision) << ',' << fixed6(row.point.recall) << ','
            << fixed6(row.point.f1) << ',' << row.point.support << '\n';
    }
}

void to_json(nlohmann::json& j, const SweepReport& report)
{
    j = nlohmann::json::array();
    for (const auto& row : report.rows) {
        j.push_back({{"threshold", row.point.threshold},
                     {"backend", to_string(row.backend)},
                     {"precision", row.point.precision},
                     {"recall", row.point.recall},
                     {"f1", row.point.f1},
                     {"support", row.point.support},
                     {"predicted_labels", row.point.predicted_labels}});
    }
    j = nlohmann::json{{"kind", "threshold_sweep"}, {"rows", std::move(j)}};
}

SweepReport threshold_sweep(std::span<const TechspecCheck> data, const ControlCatalog& catalog,
                            std::span<const Backend> backends, const EvalConfig& config,
                            const TrainConfig& train, const StopwordList& stopwords,
                            const MapperConfig& mapper)
{
    config.validate();
    train.validate();
    if (backends.empty()) {
        throw Error(ErrorCode::InvalidArgument, "no backend selected");
    }

    bool needs_model = false;
    for (auto b : backends) {
        needs_model = needs_model || b != Backend::Search;
    }

    // sums[backend][threshold]
    std::vector<std::vector<MetricPoint>> sums(backends.size());
    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        const auto [train_set, test_set] =
            split_folds<TechspecCheck>(data, config, config.seed + iter);
        const auto index = build_mapping_index(catalog, train_set, stopwords);

        std::optional<CnnModel> model;
        if (needs_model) {
            TrainConfig tc = train;
            tc.seed = train.seed + iter;
            model = train_model(training_texts(train_set), catalog.label_order(), tc, stopwords);
        }
        const auto examples = score_examples(test_set, index, model ? &*model : nullptr,
                                             stopwords, config.max_hits, mapper.cnn_floor);
        for (std::size_t b = 0; b < backends.size(); ++b) {
            const auto pts = sweep_backend(examples, backends[b], config.thresholds,
                                           config.averaging, mapper.fusion);
            if (sums[b].empty()) {
                sums[b] = pts;
                continue;
            }
            for (std::size_t t = 0; t < pts.size(); ++t) {
                sums[b][t].precision += pts[t].precision;
                sums[b][t].recall += pts[t].recall;
                sums[b][t].support += pts[t].support;
                sums[b][t].predicted_labels += pts[t].predicted_labels;
            }
        }
    }

    const double n = static_cast<double>(config.iterations);
    SweepReport report;
    for (std::size_t b = 0; b < backends.size(); ++b) {
        for (auto p : sums[b]) {
            p.precision /= n;
            p.recall /= n;
            p.f1 = f1_of(p.precision, p.recall);
            p.support /= config.iterations;
            p.predicted_labels /= n;
            report.rows.push_back(SweepRow{backends[b], p});
        }
    }
    return report;
}

void FeedbackExperimentResult::write_csv(std::ostream& out) const
{
    out << "iteration,precision,recall,f1,retrains,model_generation\n";
    for (const auto& p : points) {
        out << p.iteration << ',' << fixed6(p.metrics.precision) << ','
            << fixed6(p.metrics.recall) << ',' << fixed6(p.metrics.f1) << ',' << p.retrains
            << ',' << p.model_generation << '\n';
    }
}

void to_json(nlohmann::json& j, const FeedbackExperimentResult& result)
{
    auto pts = nlohmann::json::array();
    for (const auto& p : result.points) {
        pts.push_back({{"iteration", p.iteration},
                       {"precision", p.metrics.precision},
                       {"recall", p.metrics.recall},
                       {"f1", p.metrics.f1},
                       {"retrains", p.retrains},
                       {"model_generation", p.model_generation},
                       {"index_generation", p.index_generation}});
    }
    j = nlohmann::json{
        {"kind", "feedback_experiment"}, {"points", std::move(pts)}, {"retrains", result.retrains}};
}

FeedbackExperimentResult simulate_feedback_experiment(
    std::span<const TechspecCheck> base_train, std::span<const TechspecCheck> feedback_pool,
    std::span<const TechspecCheck> eval_set, const ControlCatalog& catalog,
    const FeedbackExperimentConfig& config, const TrainConfig& train,
    const StopwordList& stopwords, const MapperConfig& mapper)
{
    if (config.y == 0 || config.iterations == 0) {
        throw Error(ErrorCode::InvalidArgument, "y and iterations must be at least 1");
    }
    if (feedback_pool.size() != config.y * config.iterations) {
        throw Error(ErrorCode::PoolSizeMismatch,
                    "pool of " + std::to_string(feedback_pool.size()) + " cannot be split into " +
                        std::to_string(config.iterations) + " batches of " +
                        std::to_string(config.y));
    }
    if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 1]");
    }
    for (const auto& check : feedback_pool) {
        if (check.labels.empty()) {
            throw Error(ErrorCode::InvalidArgument,
                        "feedback pool check '" + check.check_id + "' has no labels");
        }
    }

    auto index = std::make_shared<const InvertedIndex>(
        build_mapping_index(catalog, base_train, stopwords));
    auto base_texts = training_texts(base_train);
    auto model = std::make_shared<CnnModel>(
        train_model(base_texts, catalog.label_order(), train, stopwords));
    model->generation = 1;

    ActiveLearner learner(catalog, index, model, std::move(base_texts),
                          FeedbackConfig{config.y}, train, stopwords);

    FeedbackExperimentResult result;
    auto record_point = [&](std::size_t iteration) {
        FeedbackExperimentPoint p;
        p.iteration = iteration;
        p.metrics = evaluate(learner, eval_set, config, stopwords, mapper);
        p.retrains = learner.retrains_scheduled();
        p.model_generation = learner.state().current_model_generation;
        p.index_generation = learner.index()->generation();
        result.points.push_back(p);
    };
    record_point(0);

    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        for (std::size_t i = 0; i < config.y; ++i) {
            const auto& check = feedback_pool[iter * config.y + i];
            const auto text = build_specification_text(check);

            // The expert sees what the system proposes now, confirms the true
            // controls, and rejects the rest.
            const auto tokens = preprocess(text, stopwords);
            const auto candidates = score_candidates(tokens, *learner.index(),
                                                     learner.model().get(), config.max_hits,
                                                     mapper.cnn_floor);
            const auto proposed = label_set(select(
                backend_scores(candidates, config.backend, mapper.fusion), config.threshold));

            FeedbackRecord record;
            record.feedback_id = "sim-" + check.check_id;
            record.check_text = text;
            record.accepted = check.labels;
            std::set_difference(proposed.begin(), proposed.end(), check.labels.begin(),
                                check.labels.end(), std::back_inserter(record.rejected));
            record.author = "simulated-expert";
            learner.submit_feedback(std::move(record));
            learner.maybe_retrain();
        }
        record_point(iter + 1);
    }
    result.retrains = learner.retrains_scheduled();
    return result;
}

}  // namespace ctlmap
