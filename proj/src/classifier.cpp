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

#include "ctlmap/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctlmap/binary_io.hpp"
#include "ctlmap/error.hpp"

namespace ctlmap {

namespace {

constexpr double kLossEps = 1e-12;
constexpr char kSnapshotMagic[8] = {'C', 'T', 'L', 'M', 'S', 'N', 'A', 'P'};

double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Four independent accumulators; the summation order is fixed so results are
// reproducible run to run.
double dot(const double* a, const double* b, std::size_t n)
{
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) {
        s0 += a[i] * b[i];
    }
    return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

// Per-example intermediate values kept for the backward pass.
struct Activations {
    std::size_t length = 0;             // real tokens
    std::vector<double> x;              // max(length, max_width) rows of d, zero past length
    std::vector<double> pooled;         // features
    std::vector<std::ptrdiff_t> argmax; // window start, -1 when the pooled value is 0
    std::vector<double> scores;         // L
};

std::size_t real_length(std::span<const std::int32_t> ids)
{
    auto it = std::find(ids.begin(), ids.end(), Vocabulary::kPadId);
    return static_cast<std::size_t>(it - ids.begin());
}

void check_shape(const CnnParams& params)
{
    const auto& s = params.shape;
    if (s.embedding_dim == 0 || s.filter_widths.empty() || s.filters_per_width == 0 ||
        s.num_labels == 0 || s.vocab_size < 2) {
        throw Error(ErrorCode::ShapeMismatch, "network shape has a zero dimension");
    }
    if (std::find(s.filter_widths.begin(), s.filter_widths.end(), 0u) != s.filter_widths.end()) {
        throw Error(ErrorCode::ShapeMismatch, "filter width must be positive");
    }
    if (params.values.size() != s.total()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "parameter vector has " + std::to_string(params.values.size()) +
                        " entries, shape needs " + std::to_string(s.total()));
    }
}

void forward_into(const CnnParams& params, std::span<const std::int32_t> ids, Activations& act)
{
    const auto& shape = params.shape;
    const std::size_t d = shape.embedding_dim;
    const std::size_t nf = shape.filters_per_width;
    const std::size_t n = real_length(ids);
    const std::size_t rows = std::max(n, shape.max_width());

    act.length = n;
    act.x.assign(rows * d, 0.0);
    const auto emb = params.embeddings();
    for (std::size_t p = 0; p < n; ++p) {
        const auto id = ids[p];
        if (id < 0 || static_cast<std::size_t>(id) >= shape.vocab_size) {
            throw Error(ErrorCode::ShapeMismatch, "token id " + std::to_string(id) +
                                                      " outside vocabulary");
        }
        std::copy_n(emb.data() + static_cast<std::size_t>(id) * d, d, act.x.data() + p * d);
    }

    act.pooled.assign(shape.features(), 0.0);
    act.argmax.assign(shape.features(), -1);
    for (std::size_t k = 0; k < shape.filter_widths.size(); ++k) {
        const std::size_t w = shape.filter_widths[k];
        const std::size_t span_len = w * d;
        const std::size_t windows = n >= w ? n - w + 1 : 1;
        const auto filt = params.filters(k);
        const auto bias = params.filter_bias(k);
        for (std::size_t f = 0; f < nf; ++f) {
            const double* row = filt.data() + f * span_len;
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t s = 0; s < windows; ++s) {
                const double v = bias[f] + dot(row, act.x.data() + s * d, span_len);
                if (v > best) {
                    best = v;
                    arg = s;
                }
            }
            const std::size_t feat = k * nf + f;
            if (best > 0.0) {
                act.pooled[feat] = best;
                act.argmax[feat] = static_cast<std::ptrdiff_t>(arg);
            }
        }
    }

    const std::size_t nl = shape.num_labels;
    const std::size_t nfeat = shape.features();
    const auto ow = params.output_weights();
    const auto ob = params.output_bias();
    act.scores.resize(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        act.scores[l] = sigmoid(ob[l] + dot(ow.data() + l * nfeat, act.pooled.data(), nfeat));
    }
}

// Adds scale * d loss / d params into grad. `dx` and `dpooled` are scratch.
void backward_into(const CnnParams& params, std::span<const std::int32_t> ids,
                   std::span<const std::uint8_t> truth, const Activations& act, double scale,
                   std::span<double> grad, std::vector<double>& dpooled, std::vector<double>& dx)
{
    const auto& shape = params.shape;
    const std::size_t d = shape.embedding_dim;
    const std::size_t nf = shape.filters_per_width;
    const std::size_t nl = shape.num_labels;
    const std::size_t nfeat = shape.features();
    const double inv_l = 1.0 / static_cast<double>(nl);

    const auto ow = params.output_weights();
    double* g_ow = grad.data() + shape.output_weights_offset();
    double* g_ob = grad.data() + shape.output_bias_offset();

    dpooled.assign(nfeat, 0.0);
    for (std::size_t l = 0; l < nl; ++l) {
        const double s = act.scores[l];
        const double ds = s * (1.0 - s);
        const double y = truth[l] ? 1.0 : 0.0;
        const double dz = -scale * inv_l *
                          (y * ds / (s + kLossEps) - (1.0 - y) * ds / (1.0 - s + kLossEps));
        if (dz == 0.0) {
            continue;
        }
        g_ob[l] += dz;
        axpy(dz, act.pooled.data(), g_ow + l * nfeat, nfeat);
        axpy(dz, ow.data() + l * nfeat, dpooled.data(), nfeat);
    }

    dx.assign(act.x.size(), 0.0);
    for (std::size_t k = 0; k < shape.filter_widths.size(); ++k) {
        const std::size_t span_len = shape.filter_widths[k] * d;
        const auto filt = params.filters(k);
        double* g_filt = grad.data() + shape.filters_offset(k);
        double* g_bias = grad.data() + shape.filter_bias_offset(k);
        for (std::size_t f = 0; f < nf; ++f) {
            const std::size_t feat = k * nf + f;
            const auto s = act.argmax[feat];
            if (s < 0 || dpooled[feat] == 0.0) {
                continue;
            }
            const double g = dpooled[feat];
            const std::size_t start = static_cast<std::size_t>(s) * d;
            g_bias[f] += g;
            axpy(g, act.x.data() + start, g_filt + f * span_len, span_len);
            axpy(g, filt.data() + f * span_len, dx.data() + start, span_len);
        }
    }

    double* g_emb = grad.data() + shape.embeddings_offset();
    for (std::size_t p = 0; p < act.length; ++p) {
        const auto id = static_cast<std::size_t>(ids[p]);
        double* row = g_emb + id * d;
        const double* src = dx.data() + p * d;
        for (std::size_t c = 0; c < d; ++c) {
            row[c] += src[c];
        }
    }
}

void check_example(const CnnShape& shape, const LabelledSequence& ex)
{
    if (ex.truth.size() != shape.num_labels) {
        throw Error(ErrorCode::ShapeMismatch, "example has " + std::to_string(ex.truth.size()) +
                                                  " truth flags, network has " +
                                                  std::to_string(shape.num_labels) + " labels");
    }
}

// Uniform double in [0, 1) from the top 53 bits; unlike the standard
// distributions this is identical across standard library implementations.
double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

// Vocabulary -----------------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{"<unk>", "<pad>"}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens))
{
    if (tokens_.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "vocabulary needs the unk and pad entries");
    }
    for (std::size_t i = 2; i < tokens_.size(); ++i) {
        if (!ids_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate vocabulary token " + tokens_[i]);
        }
    }
}

std::int32_t Vocabulary::id_of(const std::string& token) const
{
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
}

Vocabulary build_vocabulary(std::span<const TokenStream> train, std::size_t min_freq)
{
    if (train.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "cannot build a vocabulary from no examples");
    }
    std::map<std::string, std::size_t> freq;
    for (const auto& ts : train) {
        for (const auto& t : ts.tokens) {
            ++freq[t];
        }
    }
    std::vector<std::string> tokens{"<unk>", "<pad>"};
    for (const auto& [tok, count] : freq) {
        if (count >= std::max<std::size_t>(min_freq, 1)) {
            tokens.push_back(tok);
        }
    }
    return Vocabulary(std::move(tokens));
}

std::vector<std::int32_t> vectorize(const TokenStream& tokens, const Vocabulary& vocab,
                                    std::size_t max_seq_len)
{
    std::vector<std::int32_t> ids(max_seq_len, Vocabulary::kPadId);
    const std::size_t n = std::min(max_seq_len, tokens.tokens.size());
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = vocab.id_of(tokens.tokens[i]);
    }
    return ids;
}

// Shapes and parameters ----------------------------------------------------------

void TrainConfig::validate() const
{
    const bool ok = embedding_dim > 0 && !filter_widths.empty() && filters_per_width > 0 &&
                    epochs > 0 && batch_size > 0 && learning_rate > 0.0 && max_seq_len > 0 &&
                    std::find(filter_widths.begin(), filter_widths.end(), 0u) ==
                        filter_widths.end() &&
                    beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 &&
                    adam_epsilon > 0.0 && divergence_factor > 1.0;
    if (!ok) {
        throw Error(ErrorCode::InvalidArgument, "training configuration has a non-positive value");
    }
}

std::size_t CnnShape::max_width() const
{
    return filter_widths.empty() ? 0 : *std::max_element(filter_widths.begin(), filter_widths.end());
}

std::size_t CnnShape::filters_offset(std::size_t k) const
{
    std::size_t off = vocab_size * embedding_dim;
    for (std::size_t i = 0; i < k; ++i) {
        off += filters_per_width * filter_widths[i] * embedding_dim + filters_per_width;
    }
    return off;
}

std::size_t CnnShape::filter_bias_offset(std::size_t k) const
{
    return filters_offset(k) + filters_per_width * filter_widths[k] * embedding_dim;
}

std::size_t CnnShape::output_weights_offset() const
{
    return filters_offset(filter_widths.size());
}

std::size_t CnnShape::output_bias_offset() const
{
    return output_weights_offset() + num_labels * features();
}

std::size_t CnnShape::total() const
{
    return output_bias_offset() + num_labels;
}

CnnParams CnnParams::zeros(CnnShape shape)
{
    CnnParams p;
    p.values.assign(shape.total(), 0.0);
    p.shape = std::move(shape);
    return p;
}

CnnParams CnnParams::random(CnnShape shape, std::uint64_t seed, double scale)
{
    CnnParams p = zeros(std::move(shape));
    std::mt19937_64 rng(seed);
    auto fill = [&](std::span<double> v) {
        for (auto& x : v) {
            x = (2.0 * unit_uniform(rng) - 1.0) * scale;
        }
    };
    fill(p.embeddings());
    for (std::size_t k = 0; k < p.shape.filter_widths.size(); ++k) {
        fill(p.filters(k));
    }
    fill(p.output_weights());
    auto pad = p.embeddings().subspan(Vocabulary::kPadId * p.shape.embedding_dim,
                                      p.shape.embedding_dim);
    std::fill(pad.begin(), pad.end(), 0.0);
    return p;
}

std::span<double> CnnParams::embeddings()
{
    return {values.data() + shape.embeddings_offset(), shape.vocab_size * shape.embedding_dim};
}

std::span<const double> CnnParams::embeddings() const
{
    return {values.data() + shape.embeddings_offset(), shape.vocab_size * shape.embedding_dim};
}

std::span<double> CnnParams::filters(std::size_t k)
{
    return {values.data() + shape.filters_offset(k), shape.filters_per_width * shape.filter_widths[k] * shape.embedding_dim};
}

std::span<const double> CnnParams::filters(std::size_t k) const
{
    return {values.data() + shape.filters_offset(k), shape.filters_per_width * shape.filter_widths[k] * shape.embedding_dim};
}

std::span<double> CnnParams::filter_bias(std::size_t k)
{
    return {values.data() + shape.filter_bias_offset(k), shape.filters_per_width};
}

std::span<const double> CnnParams::filter_bias(std::size_t k) const
{
    return {values.data() + shape.filter_bias_offset(k), shape.filters_per_width};
}

std::span<double> CnnParams::output_weights()
{
    return {values.data() + shape.output_weights_offset(), shape.num_labels * shape.features()};
}

std::span<const double> CnnParams::output_weights() const
{
    return {values.data() + shape.output_weights_offset(), shape.num_labels * shape.features()};
}

std::span<double> CnnParams::output_bias()
{
    return {values.data() + shape.output_bias_offset(), shape.num_labels};
}

std::span<const double> CnnParams::output_bias() const
{
    return {values.data() + shape.output_bias_offset(), shape.num_labels};
}

// Forward, loss, gradients ----------------------------------------------------------

LabelScores forward(const CnnParams& params, std::span<const std::int32_t> ids)
{
    check_shape(params);
    Activations act;
    forward_into(params, ids, act);
    return std::move(act.scores);
}

double loss(std::span<const double> scores, std::span<const std::uint8_t> truth)
{
    if (scores.size() != truth.size()) {
        throw Error(ErrorCode::ShapeMismatch, "scores and truth differ in length");
    }
    if (scores.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t l = 0; l < scores.size(); ++l) {
        const double s = scores[l];
        total += truth[l] ? -std::log(s + kLossEps) : -std::log(1.0 - s + kLossEps);
    }
    return total / static_cast<double>(scores.size());
}

double example_loss(const CnnParams& params, const LabelledSequence& example)
{
    check_example(params.shape, example);
    return loss(forward(params, example.ids), example.truth);
}

std::vector<double> analytic_gradient(const CnnParams& params, const LabelledSequence& example)
{
    check_shape(params);
    check_example(params.shape, example);
    Activations act;
    forward_into(params, example.ids, act);
    std::vector<double> grad(params.values.size(), 0.0);
    std::vector<double> dpooled, dx;
    backward_into(params, example.ids, example.truth, act, 1.0, grad, dpooled, dx);
    return grad;
}

std::vector<double> numeric_gradient(const CnnParams& params, const LabelledSequence& example,
                                     double h)
{
    check_shape(params);
    check_example(params.shape, example);
    CnnParams probe = params;
    std::vector<double> grad(params.values.size(), 0.0);
    for (std::size_t i = 0; i < probe.values.size(); ++i) {
        const double orig = probe.values[i];
        probe.values[i] = orig + h;
        const double up = example_loss(probe, example);
        probe.values[i] = orig - h;
        const double down = example_loss(probe, example);
        probe.values[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                          double floor)
{
    if (analytic.size() != numeric.size()) {
        throw Error(ErrorCode::ShapeMismatch, "gradient vectors differ in length");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i];
        const double n = numeric[i];
        const double denom = std::max({std::abs(a), std::abs(n), floor});
        worst = std::max(worst, std::abs(a - n) / denom);
    }
    return worst;
}

GradientCheckResult gradient_check(const CnnParams& params, const LabelledSequence& example,
                                   double h)
{
    GradientCheckResult r;
    r.analytic = analytic_gradient(params, example);
    r.numeric = numeric_gradient(params, example, h);
    r.max_relative_error = max_relative_error(r.analytic, r.numeric);
    return r;
}

// Training ---------------------------------------------------------------------------

TrainResult train(std::span<const LabelledSequence> data, const CnnShape& shape,
                  const TrainConfig& config)
{
    config.validate();
    if (data.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no training examples");
    }
    for (const auto& ex : data) {
        check_example(shape, ex);
    }

    TrainResult result;
    result.params = CnnParams::random(shape, config.seed);
    auto& params = result.params;
    check_shape(params);

    const std::size_t total = params.values.size();
    std::vector<double> grad(total, 0.0), m(total, 0.0), v(total, 0.0);
    std::vector<double> dpooled, dx;
    Activations act;

    double initial = 0.0;
    for (const auto& ex : data) {
        forward_into(params, ex.ids, act);
        initial += loss(act.scores, ex.truth);
    }
    result.initial_loss = initial / static_cast<double>(data.size());

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ull);

    const double b1 = config.beta1;
    const double b2 = config.beta2;
    double b1_pow = 1.0;
    double b2_pow = 1.0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng() % i]);
        }

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double scale = 1.0 / static_cast<double>(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t j = start; j < end; ++j) {
                const auto& ex = data[order[j]];
                forward_into(params, ex.ids, act);
                epoch_loss += loss(act.scores, ex.truth);
                backward_into(params, ex.ids, ex.truth, act, scale, grad, dpooled, dx);
            }

            b1_pow *= b1;
            b2_pow *= b2;
            const double step = config.learning_rate / (1.0 - b1_pow);
            const double v_corr = 1.0 / (1.0 - b2_pow);
            const double eps = config.adam_epsilon;
            double* theta = params.values.data();
            for (std::size_t i = 0; i < total; ++i) {
                const double g = grad[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                theta[i] -= step * m[i] / (std::sqrt(v[i] * v_corr) + eps);
            }
        }

        epoch_loss /= static_cast<double>(data.size());
        result.loss_history.push_back(epoch_loss);
        const bool finite_params = std::all_of(params.values.begin(), params.values.end(),
                                               [](double x) { return std::isfinite(x); });
        if (!std::isfinite(epoch_loss) || !finite_params ||
            epoch_loss > config.divergence_factor * result.initial_loss) {
            std::ostringstream msg;
            msg << "training diverged at epoch " << epoch + 1 << ": mean loss " << epoch_loss
                << " (initial " << result.initial_loss << ", learning rate "
                << config.learning_rate << (finite_params ? "" : ", non-finite parameters")
                << ")";
            throw Error(ErrorCode::NonFiniteLoss, msg.str());
        }
    }
    return result;
}

CnnModel train_model(std::span<const TrainingText> data, std::vector<std::string> labels,
                     const TrainConfig& config, const StopwordList& stopwords)
{
    config.validate();
    if (data.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no training examples");
    }
    if (labels.empty()) {
        throw Error(ErrorCode::ShapeMismatch, "label space is empty");
    }
    std::unordered_map<std::string, std::size_t> label_index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        label_index.emplace(labels[i], i);
    }

    std::vector<TokenStream> tokens;
    tokens.reserve(data.size());
    for (const auto& t : data) {
        tokens.push_back(preprocess(t.text, stopwords));
    }

    CnnModel model;
    model.config = config;
    model.stopword_version = stopwords.version();
    model.vocab = build_vocabulary(tokens, config.min_freq);
    model.labels = std::move(labels);

    std::vector<LabelledSequence> examples;
    examples.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        LabelledSequence ex;
        ex.ids = vectorize(tokens[i], model.vocab, config.max_seq_len);
        ex.truth.assign(model.labels.size(), 0);
        for (const auto& p : data[i].positives) {
            auto it = label_index.find(p);
            if (it == label_index.end()) {
                throw Error(ErrorCode::UnknownLabel, "training label '" + p +
                                                         "' is not in the label space");
            }
            ex.truth[it->second] = 1;
        }
        examples.push_back(std::move(ex));
    }

    CnnShape shape;
    shape.vocab_size = model.vocab.size();
    shape.embedding_dim = config.embedding_dim;
    shape.filter_widths = config.filter_widths;
    shape.filters_per_width = config.filters_per_width;
    shape.num_labels = model.labels.size();

    auto result = train(examples, shape, config);
    model.params = std::move(result.params);
    model.loss_history = std::move(result.loss_history);
    return model;
}

std::map<std::string, double> predict_tokens(const CnnModel& model, const TokenStream& tokens,
                                             double floor)
{
    if (model.params.empty()) {
        throw Error(ErrorCode::ModelNotTrained, "no classifier parameters loaded");
    }
    const auto ids = vectorize(tokens, model.vocab, model.config.max_seq_len);
    const auto scores = forward(model.params, ids);
    if (scores.size() != model.labels.size()) {
        throw Error(ErrorCode::ShapeMismatch, "model label order does not match its parameters");
    }
    std::map<std::string, double> out;
    for (std::size_t l = 0; l < scores.size(); ++l) {
        if (scores[l] >= floor) {
            out.emplace(model.labels[l], scores[l]);
        }
    }
    return out;
}

std::map<std::string, double> predict(const CnnModel& model, std::string_view text,
                                      const StopwordList& stopwords, double floor)
{
    return predict_tokens(model, preprocess(text, stopwords), floor);
}

void to_json(nlohmann::json& j, const TrainConfig& c)
{
    j = nlohmann::json{
        {"embedding_dim", c.embedding_dim},
        {"filter_widths", c.filter_widths},
        {"filters_per_width", c.filters_per_width},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"learning_rate", c.learning_rate},
        {"seed", c.seed},
        {"max_seq_len", c.max_seq_len},
        {"min_freq", c.min_freq},
        {"beta1", c.beta1},
        {"beta2", c.beta2},
        {"adam_epsilon", c.adam_epsilon},
        {"divergence_factor", c.divergence_factor},
    };
}

void from_json(const nlohmann::json& j, TrainConfig& c)
{
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.filter_widths = j.value("filter_widths", c.filter_widths);
    c.filters_per_width = j.value("filters_per_width", c.filters_per_width);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.min_freq = j.value("min_freq", c.min_freq);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
    c.divergence_factor = j.value("divergence_factor", c.divergence_factor);
}

// Snapshots --------------------------------------------------------------------------
//
// magic[8] | u32 version | str header JSON | f64s loss history | f64s params

void CnnModel::save(std::ostream& out) const
{
    nlohmann::ordered_json header;
    header["generation"] = generation;
    header["stopword_version"] = stopword_version;
    header["config"] = {
        {"embedding_dim", config.embedding_dim},
        {"filter_widths", config.filter_widths},
        {"filters_per_width", config.filters_per_width},
        {"epochs", config.epochs},
        {"batch_size", config.batch_size},
        {"learning_rate", config.learning_rate},
        {"seed", config.seed},
        {"max_seq_len", config.max_seq_len},
        {"min_freq", config.min_freq},
        {"beta1", config.beta1},
        {"beta2", config.beta2},
        {"adam_epsilon", config.adam_epsilon},
        {"divergence_factor", config.divergence_factor},
    };
    header["shape"] = {
        {"vocab_size", params.shape.vocab_size},
        {"embedding_dim", params.shape.embedding_dim},
        {"filter_widths", params.shape.filter_widths},
        {"filters_per_width", params.shape.filters_per_width},
        {"num_labels", params.shape.num_labels},
    };
    header["labels"] = labels;
    header["vocabulary"] = vocab.tokens();

    bin::Writer w(out);
    w.bytes(kSnapshotMagic, sizeof kSnapshotMagic);
    w.u32(kFormatVersion);
    w.str(header.dump());
    w.f64s(loss_history);
    w.f64s(params.values);
    w.check();
}

CnnModel CnnModel::load(std::istream& in)
{
    bin::Reader r(in);
    char magic[sizeof kSnapshotMagic];
    r.bytes(magic, sizeof magic);
    if (!std::equal(std::begin(magic), std::end(magic), std::begin(kSnapshotMagic))) {
        throw Error(ErrorCode::ParseError, "not a model snapshot");
    }
    if (const auto version = r.u32(); version != kFormatVersion) {
        throw Error(ErrorCode::ParseError, "unsupported snapshot version " +
                                               std::to_string(version));
    }
    CnnModel m;
    try {
        const auto header = nlohmann::json::parse(r.str());
        m.generation = header.at("generation").get<std::uint64_t>();
        m.stopword_version = header.at("stopword_version").get<std::string>();
        header.at("config").get_to(m.config);
        const auto& s = header.at("shape");
        m.params.shape.vocab_size = s.at("vocab_size").get<std::size_t>();
        m.params.shape.embedding_dim = s.at("embedding_dim").get<std::size_t>();
        m.params.shape.filter_widths = s.at("filter_widths").get<std::vector<std::size_t>>();
        m.params.shape.filters_per_width = s.at("filters_per_width").get<std::size_t>();
        m.params.shape.num_labels = s.at("num_labels").get<std::size_t>();
        m.labels = header.at("labels").get<std::vector<std::string>>();
        m.vocab = Vocabulary(header.at("vocabulary").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("bad snapshot header: ") + e.what());
    }
    m.loss_history = r.f64s();
    m.params.values = r.f64s();
    check_shape(m.params);
    if (m.params.shape.vocab_size != m.vocab.size() ||
        m.params.shape.num_labels != m.labels.size()) {
        throw Error(ErrorCode::ShapeMismatch, "snapshot header disagrees with its tensors");
    }
    return m;
}

void CnnModel::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    save(out);
}

CnnModel CnnModel::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    return load(in);
}

}  // namespace ctlmap
