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

// Multilabel convolutional text classifier.
//
//   ids -> embedding (V x d) -> per filter width w: valid 1-D convolution,
//   n_f filters, ReLU -> max over time -> concat (|W| * n_f) -> affine (L) ->
//   sigmoid per label.
//
// Padding is masked: a sequence's real length n is the position of its first
// pad id. Windows start at 0 .. max(n - w + 1, 1) - 1 and any position >= n
// reads a zero vector, so the pad embedding row is never used and scores do
// not depend on how much trailing padding follows the text.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctlmap/corpus.hpp"

namespace ctlmap {

class Vocabulary {
public:
    static constexpr std::int32_t kUnkId = 0;
    static constexpr std::int32_t kPadId = 1;

    Vocabulary();

    /// Tokens in id order, including the two reserved entries.
    explicit Vocabulary(std::vector<std::string> tokens);

    std::int32_t id_of(const std::string& token) const;
    bool contains(const std::string& token) const { return ids_.count(token) != 0; }
    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> ids_;
};

/// Tokens seen at least `min_freq` times get dense ids (in lexicographic
/// order, after unk and pad). Throws EmptyTrainingSet for an empty input.
Vocabulary build_vocabulary(std::span<const TokenStream> train, std::size_t min_freq);

/// Maps tokens to ids (unknown -> unk) and pads or truncates to max_seq_len.
std::vector<std::int32_t> vectorize(const TokenStream& tokens, const Vocabulary& vocab,
                                    std::size_t max_seq_len);

struct TrainConfig {
    std::size_t embedding_dim = 64;
    std::vector<std::size_t> filter_widths{2, 3, 4};
    std::size_t filters_per_width = 32;
    std::size_t epochs = 40;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
    std::size_t max_seq_len = 128;
    std::size_t min_freq = 2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    // Training aborts with NonFiniteLoss once an epoch's mean loss is
    // non-finite or exceeds this multiple of the loss before the first update.
    double divergence_factor = 10.0;

    /// Throws InvalidArgument unless every size and rate is positive.
    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Dimensions of a network and the offsets of each tensor in the flat
/// parameter vector.
struct CnnShape {
    std::size_t vocab_size = 0;
    std::size_t embedding_dim = 0;
    std::vector<std::size_t> filter_widths;
    std::size_t filters_per_width = 0;
    std::size_t num_labels = 0;

    std::size_t features() const { return filter_widths.size() * filters_per_width; }
    std::size_t max_width() const;

    std::size_t embeddings_offset() const { return 0; }
    std::size_t filters_offset(std::size_t k) const;      // n_f x (w_k * d)
    std::size_t filter_bias_offset(std::size_t k) const;  // n_f
    std::size_t output_weights_offset() const;            // L x features
    std::size_t output_bias_offset() const;               // L
    std::size_t total() const;

    bool operator==(const CnnShape&) const = default;
};

/// All trainable tensors stored contiguously in one vector.
struct CnnParams {
    CnnShape shape;
    std::vector<double> values;

    static CnnParams zeros(CnnShape shape);
    /// Uniform(-scale, scale) embeddings, filters and output weights, zero
    /// biases, zero pad row.
    static CnnParams random(CnnShape shape, std::uint64_t seed, double scale = 0.05);

    std::span<double> embeddings();
    std::span<const double> embeddings() const;
    std::span<double> filters(std::size_t k);
    std::span<const double> filters(std::size_t k) const;
    std::span<double> filter_bias(std::size_t k);
    std::span<const double> filter_bias(std::size_t k) const;
    std::span<double> output_weights();
    std::span<const double> output_weights() const;
    std::span<double> output_bias();
    std::span<const double> output_bias() const;

    bool empty() const noexcept { return values.empty(); }
    bool operator==(const CnnParams&) const = default;
};

using LabelScores = std::vector<double>;

/// One training or evaluation example: ids from vectorize() and a 0/1 truth
/// flag per label.
struct LabelledSequence {
    std::vector<std::int32_t> ids;
    std::vector<std::uint8_t> truth;
};

/// Throws ShapeMismatch when the parameter vector or an id does not fit the
/// shape.
LabelScores forward(const CnnParams& params, std::span<const std::int32_t> ids);

/// Mean over labels of binary cross-entropy with eps = 1e-12 inside the logs.
double loss(std::span<const double> scores, std::span<const std::uint8_t> truth);

double example_loss(const CnnParams& params, const LabelledSequence& example);

/// d loss / d params for one example, same layout as params.values.
std::vector<double> analytic_gradient(const CnnParams& params, const LabelledSequence& example);

/// Central differences, one parameter at a time.
std::vector<double> numeric_gradient(const CnnParams& params, const LabelledSequence& example,
                                     double h = 1e-5);

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor). The floor keeps parameters
/// whose true gradient is ~0 from turning round-off into a large ratio.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor = 1e-6);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::vector<double> analytic;
    std::vector<double> numeric;
};

GradientCheckResult gradient_check(const CnnParams& params, const LabelledSequence& example,
                                   double h = 1e-5);

struct TrainResult {
    CnnParams params;
    double initial_loss = 0.0;         // mean loss before the first update
    std::vector<double> loss_history;  // mean training loss per epoch
};

/// Mini-batch Adam on mean binary cross-entropy. Deterministic for a fixed
/// seed. Throws EmptyTrainingSet, ShapeMismatch, or NonFiniteLoss.
TrainResult train(std::span<const LabelledSequence> data, const CnnShape& shape,
                  const TrainConfig& config);

/// A labelled text for train_model; `positives` are control ids.
struct TrainingText {
    std::string text;
    std::vector<std::string> positives;
};

/// Everything needed to reproduce predictions: preprocessing version,
/// vocabulary, label order and parameters.
struct CnnModel {
    TrainConfig config;
    std::string stopword_version;
    Vocabulary vocab;
    std::vector<std::string> labels;  // label index -> control id
    CnnParams params;
    std::vector<double> loss_history;
    std::uint64_t generation = 0;

    static constexpr std::uint32_t kFormatVersion = 1;

    void save(std::ostream& out) const;
    static CnnModel load(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static CnnModel load(const std::filesystem::path& path);

    bool operator==(const CnnModel&) const = default;
};

/// Preprocesses, builds the vocabulary from these texts only, vectorizes and
/// trains. Positives outside `labels` throw UnknownLabel.
CnnModel train_model(std::span<const TrainingText> data, std::vector<std::string> labels,
                     const TrainConfig& config, const StopwordList& stopwords);

/// Sigmoid score per control for `text`; scores below `floor` are omitted.
/// Throws ModelNotTrained when the model has no parameters.
std::map<std::string, double> predict(const CnnModel& model, std::string_view text,
                                      const StopwordList& stopwords, double floor = 0.01);

/// Same as predict() for already preprocessed tokens.
std::map<std::string, double> predict_tokens(const CnnModel& model, const TokenStream& tokens,
                                             double floor = 0.01);

}  // namespace ctlmap
