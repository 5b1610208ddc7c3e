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

// Expert feedback loop: accepted mappings go into the search index at once,
// and the classifier is retrained from scratch after every `y` records.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctlmap/classifier.hpp"
#include "ctlmap/corpus.hpp"
#include "ctlmap/index.hpp"

namespace ctlmap {

struct FeedbackRecord {
    std::string feedback_id;
    std::string regulation_id;  // optional on input; filled in by the service
    std::string check_text;
    std::vector<std::string> accepted;  // sorted, unique
    std::vector<std::string> rejected;  // sorted, unique
    std::string submitted_at;           // ISO-8601 UTC
    std::string author;

    bool operator==(const FeedbackRecord&) const = default;
};

void to_json(nlohmann::json& j, const FeedbackRecord& r);
/// Throws Error{MissingField} or Error{ParseError}.
void from_json(const nlohmann::json& j, FeedbackRecord& r);

/// Sorts and de-duplicates the label lists, then checks the record against the
/// catalog. Throws InvalidFeedback.
void normalize_and_validate(FeedbackRecord& record, const ControlCatalog& catalog);

struct FeedbackConfig {
    std::size_t retrain_interval = 50;  // y

    void validate() const;
};

struct LearnerState {
    std::size_t pending_since_retrain = 0;
    std::size_t total_feedback = 0;
    std::uint64_t current_model_generation = 0;

    bool operator==(const LearnerState&) const = default;
};

struct FeedbackExample {
    std::string feedback_id;
    std::string text;
    std::vector<std::string> positives;
    std::vector<std::string> negatives;
};

/// Append-only JSONL log, one FeedbackRecord per line. Each append is flushed
/// to stable storage before it returns.
class FeedbackLog {
public:
    explicit FeedbackLog(std::filesystem::path path);

    void append(const FeedbackRecord& record);
    const std::filesystem::path& path() const noexcept { return path_; }

    /// Reads every complete line. A final line without its newline is a torn
    /// write from a crash: it is ignored and, when `repair` is set, cut off
    /// the file. Throws ParseError for a malformed complete line.
    static std::vector<FeedbackRecord> replay(const std::filesystem::path& path,
                                              bool repair = true);

private:
    std::filesystem::path path_;
};

/// A retrain the learner has scheduled. Running it is independent of the
/// learner, so it can happen off the serving path.
struct RetrainJob {
    std::uint64_t target_generation = 0;
    std::size_t feedback_count = 0;  // feedback records covered
    std::vector<TrainingText> data;
    std::vector<std::string> labels;
    TrainConfig config;

    std::shared_ptr<CnnModel> run(const StopwordList& stopwords) const;
};

class ActiveLearner {
public:
    ActiveLearner(ControlCatalog catalog, std::shared_ptr<const InvertedIndex> index,
                  std::shared_ptr<const CnnModel> model, std::vector<TrainingText> base_training,
                  FeedbackConfig feedback_config, TrainConfig train_config,
                  const StopwordList& stopwords = StopwordList::english());

    /// Optional write-ahead log; when set, submit_feedback appends the record
    /// before touching any in-memory state.
    void attach_log(std::shared_ptr<FeedbackLog> log) { log_ = std::move(log); }

    /// Validates, logs, indexes the accepted labels as a new document, and
    /// stores the record as a training example. Throws InvalidFeedback or
    /// DuplicateFeedbackId.
    LearnerState submit_feedback(FeedbackRecord record);

    /// Applies a record that predates the current model (for example, feedback
    /// given before the last full training run): indexed and stored like
    /// submit_feedback, but never logged and not counted toward the next
    /// retrain.
    LearnerState preload(FeedbackRecord record);

    /// Claims the next retrain when `y` records are pending: the pending count
    /// drops by y and the job carries base training data plus all feedback.
    std::optional<RetrainJob> take_retrain_job();

    /// Installs `model` unless an equal or newer generation is already in place.
    void install(std::shared_ptr<const CnnModel> model);

    /// Synchronous take + run + install. On a training error the previous model
    /// stays installed, the pending count is restored, and the error propagates.
    std::shared_ptr<const CnnModel> maybe_retrain();

    const LearnerState& state() const noexcept { return state_; }
    std::size_t retrains_scheduled() const noexcept { return retrains_scheduled_; }
    std::shared_ptr<const InvertedIndex> index() const noexcept { return index_; }
    std::shared_ptr<const CnnModel> model() const noexcept { return model_; }
    const ControlCatalog& catalog() const noexcept { return catalog_; }
    const FeedbackConfig& feedback_config() const noexcept { return feedback_config_; }
    const TrainConfig& train_config() const noexcept { return train_config_; }
    const std::vector<FeedbackRecord>& records() const noexcept { return records_; }
    const std::vector<FeedbackExample>& feedback_examples() const noexcept { return examples_; }
    bool has_feedback(const std::string& id) const { return ids_.count(id) != 0; }

    /// (feedback_id, control_id) for every accepted label.
    std::vector<std::pair<std::string, std::string>> accepted_mappings() const;

    /// Base training data followed by every feedback example.
    std::vector<TrainingText> training_data() const;

private:
    void apply(FeedbackRecord record);

    ControlCatalog catalog_;
    std::shared_ptr<const InvertedIndex> index_;
    std::shared_ptr<const CnnModel> model_;
    std::vector<TrainingText> base_;
    FeedbackConfig feedback_config_;
    TrainConfig train_config_;
    const StopwordList* stopwords_;
    std::shared_ptr<FeedbackLog> log_;

    LearnerState state_;
    std::uint64_t scheduled_generation_ = 0;
    std::size_t retrains_scheduled_ = 0;
    std::vector<FeedbackRecord> records_;
    std::vector<FeedbackExample> examples_;
    std::set<std::string> ids_;
};

}  // namespace ctlmap
