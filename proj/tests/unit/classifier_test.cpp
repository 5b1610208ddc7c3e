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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ctlmap/classifier.hpp"
#include "ctlmap/error.hpp"
#include "support/oracles.hpp"

namespace ctlmap {
namespace {

using Tokens = std::vector<std::string>;

TokenStream ts(Tokens t)
{
    TokenStream s;
    s.tokens = std::move(t);
    s.origin_len = s.tokens.size();
    return s;
}

CnnShape small_shape(std::size_t vocab, std::size_t d, std::vector<std::size_t> widths,
                     std::size_t nf, std::size_t labels)
{
    CnnShape s;
    s.vocab_size = vocab;
    s.embedding_dim = d;
    s.filter_widths = std::move(widths);
    s.filters_per_width = nf;
    s.num_labels = labels;
    return s;
}

oracle::NetDims dims_of(const CnnShape& s)
{
    return {s.vocab_size, s.embedding_dim, s.filter_widths, s.filters_per_width, s.num_labels};
}

std::vector<std::int32_t> random_ids(std::mt19937_64& rng, std::size_t vocab, std::size_t real,
                                     std::size_t padded)
{
    std::uniform_int_distribution<std::int32_t> id(2, static_cast<std::int32_t>(vocab) - 1);
    std::vector<std::int32_t> ids;
    for (std::size_t i = 0; i < real; ++i) {
        ids.push_back(id(rng));
    }
    ids.resize(padded, Vocabulary::kPadId);
    return ids;
}

/// Random parameters with non-zero biases so every path carries gradient.
CnnParams random_params(const CnnShape& shape, std::uint64_t seed, double scale)
{
    auto p = CnnParams::random(shape, seed, scale);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (std::size_t k = 0; k < shape.filter_widths.size(); ++k) {
        for (auto& b : p.filter_bias(k)) {
            b = u(rng);
        }
    }
    for (auto& b : p.output_bias()) {
        b = u(rng);
    }
    return p;
}

TEST(Vocabulary, MinFreqThreshold)
{
    const std::vector<TokenStream> data{ts({"a", "a", "b"}), ts({"a"})};
    const auto v = build_vocabulary(data, 2);
    EXPECT_TRUE(v.contains("a"));
    EXPECT_FALSE(v.contains("b"));
    EXPECT_EQ(v.size(), 3u);
    EXPECT_EQ(build_vocabulary(std::vector<TokenStream>{ts({"a", "b"})}, 1).size(), 4u);
    try {
        build_vocabulary(std::vector<TokenStream>{}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyTrainingSet);
    }
}

TEST(Vectorize, UnknownPadAndTruncate)
{
    const Vocabulary v({"<unk>", "<pad>", "a"});
    EXPECT_EQ(vectorize(ts({"a", "zzz"}), v, 4), (std::vector<std::int32_t>{2, 0, 1, 1}));
    EXPECT_EQ(vectorize(ts({"a", "a", "a", "a", "a"}), v, 3).size(), 3u);
    EXPECT_EQ(vectorize(ts({}), v, 3), (std::vector<std::int32_t>{1, 1, 1}));
}

TEST(Forward, ZeroParamsGiveHalf)
{
    const auto p = CnnParams::zeros(small_shape(6, 4, {2, 3}, 3, 5));
    for (double s : forward(p, std::vector<std::int32_t>{2, 3, 4, 1})) {
        EXPECT_EQ(s, 0.5);
    }
}

TEST(Forward, MatchesNaiveLoops)
{
    std::mt19937_64 rng(1);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto shape = small_shape(9, 4, {2}, 3, 2);
        const auto p = random_params(shape, seed, 0.5);
        const auto ids = random_ids(rng, shape.vocab_size, 1 + seed % 5, 5);
        const auto got = forward(p, ids);
        const auto want = oracle::forward(dims_of(shape), p.values, ids);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t l = 0; l < got.size(); ++l) {
            EXPECT_NEAR(got[l], want[l], 1e-10);
        }
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto shape = small_shape(12, 5, {2, 3, 4}, 4, 6);
        const auto p = random_params(shape, 100 + seed, 0.3);
        const auto ids = random_ids(rng, shape.vocab_size, seed % 9, 10);
        const auto got = forward(p, ids);
        const auto want = oracle::forward(dims_of(shape), p.values, ids);
        for (std::size_t l = 0; l < got.size(); ++l) {
            EXPECT_NEAR(got[l], want[l], 1e-10);
        }
    }
}

TEST(Forward, PadOnlyInputUsesConvBias)
{
    const auto shape = small_shape(6, 3, {2}, 2, 2);
    auto p = random_params(shape, 3, 0.5);
    const auto fb = p.filter_bias(0);
    const auto ow = p.output_weights();
    const auto ob = p.output_bias();
    const auto scores = forward(p, std::vector<std::int32_t>{1, 1, 1});
    for (std::size_t l = 0; l < 2; ++l) {
        const double z = ob[l] + ow[l * 2] * std::max(0.0, fb[0]) + ow[l * 2 + 1] * std::max(0.0, fb[1]);
        EXPECT_NEAR(scores[l], 1.0 / (1.0 + std::exp(-z)), 1e-12);
    }
}

TEST(Forward, TrailingPaddingInvariant)
{
    std::mt19937_64 rng(8);
    const auto shape = small_shape(15, 4, {2, 3}, 3, 4);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = random_params(shape, seed, 0.4);
        auto ids = random_ids(rng, shape.vocab_size, 1 + seed % 6, 6);
        const auto base = forward(p, ids);
        for (int extra = 1; extra < 5; ++extra) {
            ids.push_back(Vocabulary::kPadId);
            EXPECT_EQ(forward(p, ids), base);
        }
    }
}

TEST(Forward, ScoresInOpenUnitInterval)
{
    std::mt19937_64 rng(12);
    const auto shape = small_shape(20, 6, {2, 3}, 4, 5);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto p = random_params(shape, seed, 0.5);
        for (double s : forward(p, random_ids(rng, 20, 1 + seed % 8, 8))) {
            EXPECT_GT(s, 0.0);
            EXPECT_LT(s, 1.0);
        }
    }
}

TEST(Forward, LabelPermutationCovariant)
{
    std::mt19937_64 rng(4);
    const auto shape = small_shape(10, 3, {2}, 3, 4);
    const auto p = random_params(shape, 21, 0.5);
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    auto q = p;
    const std::size_t feats = shape.features();
    for (std::size_t l = 0; l < 4; ++l) {
        for (std::size_t i = 0; i < feats; ++i) {
            q.output_weights()[l * feats + i] = p.output_weights()[perm[l] * feats + i];
        }
        q.output_bias()[l] = p.output_bias()[perm[l]];
    }
    const auto ids = random_ids(rng, 10, 5, 6);
    const auto a = forward(p, ids);
    const auto b = forward(q, ids);
    for (std::size_t l = 0; l < 4; ++l) {
        EXPECT_EQ(b[l], a[perm[l]]);
    }
}

TEST(Loss, Examples)
{
    EXPECT_NEAR(loss(std::vector<double>{0.5, 0.5, 0.5}, std::vector<std::uint8_t>{1, 0, 1}),
                std::log(2.0), 1e-9);
    EXPECT_NEAR(loss(std::vector<double>{1.0, 0.0}, std::vector<std::uint8_t>{1, 0}), 0.0, 1e-9);
    EXPECT_NEAR(loss(std::vector<double>{0.9, 0.2}, std::vector<std::uint8_t>{1, 0}),
                (-std::log(0.9) - std::log(0.8)) / 2.0, 1e-9);
    EXPECT_NEAR(loss(std::vector<double>{0.9, 0.2}, std::vector<std::uint8_t>{1, 0}), 0.164252,
                1e-6);
}

TEST(GradientCheck, RandomSmallNetworks)
{
    std::mt19937_64 rng(77);
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
        const auto shape = small_shape(8, 4, {2, 3}, 2, 3);
        const auto p = random_params(shape, seed, 0.5);
        LabelledSequence ex;
        ex.ids = random_ids(rng, shape.vocab_size, 2 + seed % 5, 7);
        ex.truth = {static_cast<std::uint8_t>(seed % 2), 1, 0};
        const auto r = gradient_check(p, ex);
        EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
    }
}

TEST(GradientCheck, UnreachableParametersHaveZeroGradient)
{
    std::mt19937_64 rng(3);
    const auto shape = small_shape(8, 4, {2}, 2, 2);
    const auto p = random_params(shape, 9, 0.5);
    LabelledSequence ex{random_ids(rng, 8, 3, 6), {1, 0}};
    const auto r = gradient_check(p, ex);
    // Pad embedding row (id 1) never reaches a window.
    for (std::size_t e = 0; e < shape.embedding_dim; ++e) {
        const std::size_t i = Vocabulary::kPadId * shape.embedding_dim + e;
        EXPECT_EQ(r.analytic[i], 0.0);
        EXPECT_NEAR(r.numeric[i], 0.0, 1e-12);
    }
}

TEST(GradientCheck, CorruptedGradientIsDetected)
{
    std::mt19937_64 rng(5);
    const auto shape = small_shape(8, 4, {2, 3}, 2, 3);
    const auto p = random_params(shape, 13, 0.5);
    LabelledSequence ex{random_ids(rng, 8, 5, 7), {1, 0, 1}};
    auto r = gradient_check(p, ex);
    ASSERT_LT(r.max_relative_error, 1e-4);
    r.analytic[shape.output_bias_offset()] += 0.1;
    EXPECT_GT(max_relative_error(r.analytic, r.numeric), 1e-2);
}

std::vector<LabelledSequence> separable_set(std::size_t n, std::size_t vocab)
{
    // Label 0 fires on tokens from the lower half of the vocabulary, label 1
    // on the upper half.
    std::mt19937_64 rng(31);
    std::vector<LabelledSequence> out;
    const auto half = static_cast<std::int32_t>(vocab / 2);
    for (std::size_t i = 0; i < n; ++i) {
        const bool upper = i % 2 == 1;
        std::uniform_int_distribution<std::int32_t> id(upper ? half : 2,
                                                        upper ? static_cast<std::int32_t>(vocab) - 1
                                                              : half - 1);
        LabelledSequence ex;
        for (int j = 0; j < 5; ++j) {
            ex.ids.push_back(id(rng));
        }
        ex.ids.resize(8, Vocabulary::kPadId);
        ex.truth = {static_cast<std::uint8_t>(!upper), static_cast<std::uint8_t>(upper)};
        out.push_back(std::move(ex));
    }
    return out;
}

TrainConfig tiny_config()
{
    TrainConfig c;
    c.embedding_dim = 8;
    c.filter_widths = {2, 3};
    c.filters_per_width = 4;
    c.epochs = 30;
    c.batch_size = 4;
    c.learning_rate = 1e-2;
    c.max_seq_len = 8;
    c.seed = 7;
    return c;
}

TEST(Train, LossDecreasesAndIsDeterministic)
{
    const auto data = separable_set(20, 16);
    const auto cfg = tiny_config();
    const auto shape = small_shape(16, cfg.embedding_dim, cfg.filter_widths,
                                   cfg.filters_per_width, 2);
    const auto a = train(data, shape, cfg);
    const auto b = train(data, shape, cfg);
    ASSERT_EQ(a.loss_history.size(), cfg.epochs);
    EXPECT_LT(a.loss_history.back(), a.initial_loss);
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_EQ(a.params.values, b.params.values);
    // pad row stays pinned at zero
    for (std::size_t e = 0; e < cfg.embedding_dim; ++e) {
        EXPECT_EQ(a.params.embeddings()[Vocabulary::kPadId * cfg.embedding_dim + e], 0.0);
    }
}

TEST(Train, HugeLearningRateRaisesNonFiniteLoss)
{
    std::mt19937_64 rng(2);
    std::vector<LabelledSequence> data;
    for (int i = 0; i < 32; ++i) {
        data.push_back({random_ids(rng, 16, 6, 8),
                        {static_cast<std::uint8_t>(rng() % 2), static_cast<std::uint8_t>(rng() % 2)}});
    }
    auto cfg = tiny_config();
    cfg.learning_rate = 1e3;
    const auto shape = small_shape(16, cfg.embedding_dim, cfg.filter_widths,
                                   cfg.filters_per_width, 2);
    try {
        train(data, shape, cfg);
        FAIL() << "expected NonFiniteLoss";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
    }
}

TEST(TrainConfig, Validation)
{
    TrainConfig c;
    c.learning_rate = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c = TrainConfig{};
    c.filter_widths.clear();
    EXPECT_THROW(c.validate(), Error);
}

CnnModel toy_model()
{
    const std::vector<TrainingText> data{
        {"disk encryption enabled volume", {"SC-28"}},
        {"encrypted disk volumes at rest", {"SC-28"}},
        {"password uppercase character policy", {"IA-5(1)"}},
        {"password complexity uppercase", {"IA-5(1)"}},
        {"administrators least privilege roles", {"AC-6"}},
        {"cluster administrators privilege", {"AC-6"}},
    };
    auto cfg = tiny_config();
    cfg.min_freq = 1;
    cfg.max_seq_len = 16;
    return train_model(data, {"AC-6", "IA-5(1)", "SC-28"}, cfg, StopwordList::english());
}

TEST(Predict, ZeroParamsAllHalf)
{
    auto m = toy_model();
    m.params = CnnParams::zeros(m.params.shape);
    const auto scores = predict(m, "anything at all", StopwordList::english());
    ASSERT_EQ(scores.size(), 3u);
    for (const auto& [label, s] : scores) {
        EXPECT_EQ(s, 0.5) << label;
    }
    EXPECT_EQ(predict(m, "", StopwordList::english()).size(), 3u);
}

TEST(Predict, LearnsToyTask)
{
    const auto m = toy_model();
    const std::vector<std::pair<std::string, std::string>> cases{
        {"disk encryption enabled volume", "SC-28"},
        {"password uppercase character policy", "IA-5(1)"},
        {"cluster administrators privilege", "AC-6"},
    };
    for (const auto& [text, label] : cases) {
        const auto s = predict(m, text, StopwordList::english(), 0.0);
        for (const auto& [other, score] : s) {
            if (other != label) {
                EXPECT_GT(s.at(label), score) << text;
            }
        }
    }
}

TEST(ModelSnapshot, RoundTripIsExact)
{
    const auto m = toy_model();
    std::stringstream a;
    m.save(a);
    const auto back = CnnModel::load(a);
    EXPECT_TRUE(back == m);
    std::stringstream b;
    back.save(b);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(predict(back, "password policy", StopwordList::english()),
              predict(m, "password policy", StopwordList::english()));
}

TEST(ModelSnapshot, RejectsTruncatedFile)
{
    const auto m = toy_model();
    std::stringstream a;
    m.save(a);
    const auto bytes = a.str();
    std::stringstream cut(bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(CnnModel::load(cut), Error);
}

}  // namespace
}  // namespace ctlmap
