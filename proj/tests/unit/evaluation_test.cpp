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

#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ctlmap/error.hpp"
#include "ctlmap/evaluation.hpp"
#include "ctlmap/fixtures.hpp"

namespace ctlmap {
namespace {

using Labels = std::vector<std::string>;

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::NotFound;
}

TEST(Prf, Examples)
{
    EXPECT_EQ(prf(Labels{"A", "B"}, Labels{"A", "C"}), (Prf{0.5, 0.5, 0.5}));
    EXPECT_EQ(prf(Labels{"A"}, Labels{"A"}), (Prf{1.0, 1.0, 1.0}));
    EXPECT_EQ(prf(Labels{}, Labels{"A"}), (Prf{0.0, 0.0, 0.0}));
    EXPECT_EQ(prf(Labels{}, Labels{}), (Prf{1.0, 1.0, 1.0}));
    EXPECT_EQ(prf(Labels{"A"}, Labels{}).recall, 1.0);
}

TEST(Prf, SymmetryAndBoundsProperty)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        Labels p, t;
        for (int i = 0; i < 6; ++i) {
            if (rng() % 2) p.push_back("L" + std::to_string(i));
            if (rng() % 2) t.push_back("L" + std::to_string(i));
        }
        const auto a = prf(p, t);
        const auto b = prf(t, p);
        // The empty-set conventions break symmetry when exactly one side is
        // empty; that case is pinned separately below.
        if (p.empty() == t.empty()) {
            EXPECT_EQ(a.precision, b.recall);
            EXPECT_EQ(a.recall, b.precision);
        }
        for (double v : {a.precision, a.recall, a.f1}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        const double expect_f1 = a.precision + a.recall > 0
                                     ? 2 * a.precision * a.recall / (a.precision + a.recall)
                                     : 0.0;
        EXPECT_DOUBLE_EQ(a.f1, expect_f1);
    }
    EXPECT_EQ(prf(Labels{}, Labels{"A"}).precision, 0.0);
    EXPECT_EQ(prf(Labels{"A"}, Labels{}).recall, 1.0);
}

TEST(SplitFolds, FifteenPercentOfHundred)
{
    EvalConfig cfg;
    const auto s = split_folds(100, cfg, 1);
    EXPECT_EQ(s.test.size(), 15u);
    EXPECT_EQ(s.train.size(), 85u);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 100u);  // disjoint and covering
    const auto again = split_folds(100, cfg, 1);
    EXPECT_EQ(again.test, s.test);
    EXPECT_NE(split_folds(100, cfg, 2).test, s.test);
}

TEST(SplitFolds, OneFoldOfK)
{
    EvalConfig cfg;
    cfg.test_fraction = 0.0;
    EXPECT_EQ(split_folds(90, cfg, 4).test.size(), 30u);
}

TEST(SplitFolds, TooSmall)
{
    EvalConfig cfg;
    EXPECT_EQ(code_of([&] { split_folds(2, cfg, 1); }), ErrorCode::DatasetTooSmall);
    EXPECT_EQ(code_of([&] { split_folds(3, cfg, 1); }), ErrorCode::DatasetTooSmall);  // 0 test
}

TEST(EvalConfig, Validation)
{
    EvalConfig cfg;
    cfg.k = 1;
    EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
    cfg = {};
    cfg.thresholds = {0.5, 0.5};
    EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
    cfg.thresholds = {0.2, 1.2};
    EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
}

ScoredExample perfect(const Labels& truth)
{
    ScoredExample ex;
    for (const auto& l : truth) {
        ex.candidates.search.push_back({l, 3.0, 1.0});
        ex.candidates.cnn[l] = 0.99;
    }
    ex.truth = truth;
    return ex;
}

TEST(Sweep, PerfectBackendScoresOne)
{
    const std::vector<ScoredExample> ex{perfect({"A"}), perfect({"B", "C"}), perfect({"D"})};
    const std::vector<double> t{0.5};
    for (auto b : {Backend::Search, Backend::Cnn, Backend::Hybrid}) {
        const auto pts = sweep_backend(ex, b, t);
        ASSERT_EQ(pts.size(), 1u);
        EXPECT_EQ(pts[0].precision, 1.0);
        EXPECT_EQ(pts[0].recall, 1.0);
        EXPECT_EQ(pts[0].f1, 1.0);
        EXPECT_EQ(pts[0].support, 3u);
    }
}

std::vector<ScoredExample> random_examples(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ScoredExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        ScoredExample ex;
        std::set<std::string> seen;
        for (int j = 0; j < 5; ++j) {
            const auto l = "C" + std::to_string(rng() % 10);
            if (seen.insert(l).second) {
                ex.candidates.search.push_back({l, 1.0, j == 0 ? 1.0 : u(rng)});
            }
            ex.candidates.cnn["C" + std::to_string(rng() % 10)] = u(rng);
        }
        ex.truth = {"C" + std::to_string(rng() % 10)};
        out.push_back(std::move(ex));
    }
    return out;
}

TEST(Sweep, MonotoneAndHybridDominatesOnRandomScores)
{
    std::mt19937_64 rng(10);
    const EvalConfig cfg;
    for (int trial = 0; trial < 50; ++trial) {
        const auto ex = random_examples(rng, 40);
        for (auto avg : {Averaging::Micro, Averaging::Macro}) {
            const auto s = sweep_backend(ex, Backend::Search, cfg.thresholds, avg);
            const auto c = sweep_backend(ex, Backend::Cnn, cfg.thresholds, avg);
            const auto h = sweep_backend(ex, Backend::Hybrid, cfg.thresholds, avg);
            for (std::size_t i = 0; i < h.size(); ++i) {
                EXPECT_GE(h[i].recall, std::max(s[i].recall, c[i].recall));
                for (const auto* pts : {&s, &c, &h}) {
                    const auto& p = (*pts)[i];
                    EXPECT_GE(p.precision, 0.0);
                    EXPECT_LE(p.precision, 1.0);
                    EXPECT_LE(p.recall, 1.0);
                    if (i > 0) {
                        EXPECT_LE(p.recall, (*pts)[i - 1].recall);
                        EXPECT_LE(p.predicted_labels, (*pts)[i - 1].predicted_labels);
                    }
                }
            }
        }
    }
}

TEST(SweepReport, CsvFormat)
{
    SweepReport r;
    r.rows.push_back({Backend::Hybrid, {0.1, 0.5, 0.25, 1.0 / 3.0, 4, 7.0}});
    std::ostringstream out;
    r.write_csv(out);
    EXPECT_EQ(out.str(),
              "threshold,backend,precision,recall,f1,support\n"
              "0.100000,hybrid,0.500000,0.250000,0.333333,4\n");
    const nlohmann::json j = r;
    EXPECT_EQ(j.at("kind"), "threshold_sweep");
}

// Small fixture slices keep these end-to-end runs fast.
struct Slices {
    fixtures::FixtureSet set = fixtures::load(CTLMAP_FIXTURES_DIR);
    ControlCatalog nist{fixtures::kNistRegulation, set.nist};
};

TrainConfig fast_train()
{
    TrainConfig c;
    c.embedding_dim = 16;
    c.filters_per_width = 8;
    c.epochs = 3;
    c.learning_rate = 5e-3;
    return c;
}

TEST(ThresholdSweep, DeterministicAndWellFormed)
{
    Slices s;
    const std::vector<TechspecCheck> data(s.set.stig_nist.begin(), s.set.stig_nist.begin() + 400);
    EvalConfig cfg;
    cfg.iterations = 2;
    const std::vector<Backend> backends{Backend::Search, Backend::Cnn, Backend::Hybrid};
    const auto a = threshold_sweep(data, s.nist, backends, cfg, fast_train(),
                                   StopwordList::english());
    const auto b = threshold_sweep(data, s.nist, backends, cfg, fast_train(),
                                   StopwordList::english());
    std::ostringstream ca, cb;
    a.write_csv(ca);
    b.write_csv(cb);
    EXPECT_EQ(ca.str(), cb.str());
    EXPECT_EQ(a.rows.size(), 27u);
    const auto h = a.points(Backend::Hybrid);
    const auto se = a.points(Backend::Search);
    const auto cn = a.points(Backend::Cnn);
    for (std::size_t i = 0; i < h.size(); ++i) {
        EXPECT_EQ(h[i].support, 60u);
        EXPECT_GE(h[i].recall, std::max(se[i].recall, cn[i].recall));
        const double p = h[i].precision, r = h[i].recall;
        EXPECT_DOUBLE_EQ(h[i].f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0);
    }
}

TEST(FeedbackExperiment, ShapeAndRetrainCount)
{
    Slices s;
    const std::vector<TechspecCheck> base(s.set.stig_nist.begin(), s.set.stig_nist.begin() + 300);
    const std::vector<TechspecCheck> eval(s.set.operator_eval.begin(),
                                          s.set.operator_eval.begin() + 40);
    FeedbackExperimentConfig cfg;
    cfg.y = 72;
    cfg.iterations = 5;
    auto train = fast_train();
    train.epochs = 1;
    const auto r = simulate_feedback_experiment(base, s.set.operator_pool, eval, s.nist, cfg, train,
                                                StopwordList::english());
    ASSERT_EQ(r.points.size(), 6u);
    EXPECT_EQ(r.retrains, 5u);
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        EXPECT_EQ(r.points[i].iteration, i);
        EXPECT_EQ(r.points[i].retrains, i);
        EXPECT_EQ(r.points[i].model_generation, 1 + i);
    }
    std::ostringstream out;
    r.write_csv(out);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
              "iteration,precision,recall,f1,retrains,model_generation");

    cfg.y = 30;
    cfg.iterations = 1;
    const std::vector<TechspecCheck> pool(s.set.operator_pool.begin(),
                                          s.set.operator_pool.begin() + 30);
    const auto one = simulate_feedback_experiment(base, pool, eval, s.nist, cfg, train,
                                                  StopwordList::english());
    EXPECT_EQ(one.points.size(), 2u);
    EXPECT_EQ(one.retrains, 1u);
}

TEST(FeedbackExperiment, PoolSizeMismatch)
{
    Slices s;
    const std::vector<TechspecCheck> base(s.set.stig_nist.begin(), s.set.stig_nist.begin() + 50);
    const std::vector<TechspecCheck> pool(s.set.operator_pool.begin(),
                                          s.set.operator_pool.begin() + 10);
    FeedbackExperimentConfig cfg;
    EXPECT_EQ(code_of([&] {
                  simulate_feedback_experiment(base, pool, pool, s.nist, cfg, fast_train(),
                                               StopwordList::english());
              }),
              ErrorCode::PoolSizeMismatch);
}

}  // namespace
}  // namespace ctlmap
