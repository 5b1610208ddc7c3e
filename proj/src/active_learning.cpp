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

#include "ctlmap/active_learning.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "ctlmap/error.hpp"

namespace ctlmap {

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string string_field(const nlohmann::json& j, const char* key, bool required)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) {
            throw Error(ErrorCode::MissingField, std::string("missing field '") + key + "'");
        }
        return {};
    }
    if (!it->is_string()) {
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return {};
    }
    if (!it->is_array()) {
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be an array");
    }
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) {
            throw Error(ErrorCode::ParseError, std::string("field '") + key +
                                                   "' must contain strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

void write_all(int fd, const std::string& data, const std::filesystem::path& path)
{
    std::size_t off = 0;
    while (off < data.size()) {
        const auto n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw Error(ErrorCode::IoError, "write to " + path.string() + " failed: " +
                                                std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

}  // namespace

void to_json(nlohmann::json& j, const FeedbackRecord& r)
{
    j = nlohmann::json{
        {"feedback_id", r.feedback_id},
        {"regulation_id", r.regulation_id},
        {"check_text", r.check_text},
        {"accepted", r.accepted},
        {"rejected", r.rejected},
        {"submitted_at", r.submitted_at},
        {"author", r.author},
    };
}

void from_json(const nlohmann::json& j, FeedbackRecord& r)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::ParseError, "feedback record must be a JSON object");
    }
    r.feedback_id = string_field(j, "feedback_id", true);
    r.regulation_id = string_field(j, "regulation_id", false);
    r.check_text = string_field(j, "check_text", true);
    r.accepted = string_list(j, "accepted");
    r.rejected = string_list(j, "rejected");
    r.submitted_at = string_field(j, "submitted_at", false);
    r.author = string_field(j, "author", false);
}

void normalize_and_validate(FeedbackRecord& record, const ControlCatalog& catalog)
{
    record.accepted = sorted_unique(std::move(record.accepted));
    record.rejected = sorted_unique(std::move(record.rejected));
    if (record.feedback_id.empty()) {
        throw Error(ErrorCode::InvalidFeedback, "feedback_id is empty");
    }
    if (record.accepted.empty() && record.rejected.empty()) {
        throw Error(ErrorCode::InvalidFeedback, "record accepts and rejects nothing");
    }
    std::vector<std::string> overlap;
    std::set_intersection(record.accepted.begin(), record.accepted.end(), record.rejected.begin(),
                          record.rejected.end(), std::back_inserter(overlap));
    if (!overlap.empty()) {
        throw Error(ErrorCode::InvalidFeedback,
                    "control '" + overlap.front() + "' is both accepted and rejected");
    }
    for (const auto* list : {&record.accepted, &record.rejected}) {
        for (const auto& id : *list) {
            if (!catalog.contains(id)) {
                throw Error(ErrorCode::InvalidFeedback,
                            "control '" + id + "' is not part of regulation '" +
                                catalog.regulation_id() + "'");
            }
        }
    }
    if (!record.regulation_id.empty() && record.regulation_id != catalog.regulation_id()) {
        throw Error(ErrorCode::InvalidFeedback, "record targets regulation '" +
                                                    record.regulation_id + "'");
    }
    record.regulation_id = catalog.regulation_id();
}

void FeedbackConfig::validate() const
{
    if (retrain_interval == 0) {
        throw Error(ErrorCode::InvalidArgument, "retrain interval must be at least 1");
    }
}

// Log ---------------------------------------------------------------------------

FeedbackLog::FeedbackLog(std::filesystem::path path) : path_(std::move(path)) {}

void FeedbackLog::append(const FeedbackRecord& record)
{
    const std::string line = nlohmann::json(record).dump() + "\n";
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw Error(ErrorCode::IoError, "cannot open " + path_.string() + ": " +
                                            std::strerror(errno));
    }
    try {
        write_all(fd, line, path_);
        if (::fsync(fd) != 0) {
            throw Error(ErrorCode::IoError, "fsync of " + path_.string() + " failed");
        }
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
}

std::vector<FeedbackRecord> FeedbackLog::replay(const std::filesystem::path& path, bool repair)
{
    std::vector<FeedbackRecord> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return out;
    }
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    in.close();

    std::size_t pos = 0;
    std::size_t line = 0;
    while (pos < data.size()) {
        const auto nl = data.find('\n', pos);
        if (nl == std::string::npos) {
            // Torn tail: the writer died before the newline made it to disk.
            if (repair) {
                std::filesystem::resize_file(path, pos);
            }
            break;
        }
        ++line;
        const std::string_view text(data.data() + pos, nl - pos);
        pos = nl + 1;
        if (text.empty()) {
            continue;
        }
        try {
            out.push_back(nlohmann::json::parse(text).get<FeedbackRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what(), line);
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what(), line);
        }
    }
    return out;
}

// Retraining ----------------------------------------------------------------------

std::shared_ptr<CnnModel> RetrainJob::run(const StopwordList& stopwords) const
{
    auto model = std::make_shared<CnnModel>(train_model(data, labels, config, stopwords));
    model->generation = target_generation;
    return model;
}

// Learner ------------------------------------------------------------------------

ActiveLearner::ActiveLearner(ControlCatalog catalog, std::shared_ptr<const InvertedIndex> index,
                             std::shared_ptr<const CnnModel> model,
                             std::vector<TrainingText> base_training,
                             FeedbackConfig feedback_config, TrainConfig train_config,
                             const StopwordList& stopwords)
    : catalog_(std::move(catalog)), index_(std::move(index)), model_(std::move(model)),
      base_(std::move(base_training)), feedback_config_(feedback_config),
      train_config_(std::move(train_config)), stopwords_(&stopwords)
{
    feedback_config_.validate();
    if (!index_) {
        throw Error(ErrorCode::EmptyIndex, "active learner needs an index");
    }
    state_.current_model_generation = model_ ? model_->generation : 0;
    scheduled_generation_ = state_.current_model_generation;
}

LearnerState ActiveLearner::submit_feedback(FeedbackRecord record)
{
    normalize_and_validate(record, catalog_);
    if (ids_.count(record.feedback_id) != 0) {
        throw Error(ErrorCode::DuplicateFeedbackId, record.feedback_id);
    }
    if (log_) {
        log_->append(record);
    }
    apply(std::move(record));
    ++state_.pending_since_retrain;
    return state_;
}

LearnerState ActiveLearner::preload(FeedbackRecord record)
{
    normalize_and_validate(record, catalog_);
    if (ids_.count(record.feedback_id) != 0) {
        throw Error(ErrorCode::DuplicateFeedbackId, record.feedback_id);
    }
    apply(std::move(record));
    return state_;
}

void ActiveLearner::apply(FeedbackRecord record)
{
    if (!record.accepted.empty()) {
        auto next = std::make_shared<InvertedIndex>(*index_);
        next->add_document(DocumentInput{"feedback:" + record.feedback_id,
                                         preprocess(record.check_text, *stopwords_),
                                         record.accepted});
        index_ = std::move(next);
    }
    examples_.push_back(
        FeedbackExample{record.feedback_id, record.check_text, record.accepted, record.rejected});
    ids_.insert(record.feedback_id);
    records_.push_back(std::move(record));
    ++state_.total_feedback;
}

std::optional<RetrainJob> ActiveLearner::take_retrain_job()
{
    if (state_.pending_since_retrain < feedback_config_.retrain_interval) {
        return std::nullopt;
    }
    state_.pending_since_retrain -= feedback_config_.retrain_interval;
    ++scheduled_generation_;
    ++retrains_scheduled_;

    RetrainJob job;
    job.target_generation = scheduled_generation_;
    job.feedback_count = state_.total_feedback;
    job.data = training_data();
    job.labels = catalog_.label_order();
    job.config = train_config_;
    return job;
}

void ActiveLearner::install(std::shared_ptr<const CnnModel> model)
{
    if (!model) {
        return;
    }
    if (model_ && model_->generation >= model->generation) {
        return;
    }
    model_ = std::move(model);
    state_.current_model_generation = model_->generation;
    scheduled_generation_ = std::max(scheduled_generation_, model_->generation);
}

std::shared_ptr<const CnnModel> ActiveLearner::maybe_retrain()
{
    auto job = take_retrain_job();
    if (!job) {
        return nullptr;
    }
    std::shared_ptr<const CnnModel> model;
    try {
        model = job->run(*stopwords_);
    } catch (...) {
        state_.pending_since_retrain += feedback_config_.retrain_interval;
        --scheduled_generation_;
        --retrains_scheduled_;
        throw;
    }
    install(model);
    return model;
}

std::vector<std::pair<std::string, std::string>> ActiveLearner::accepted_mappings() const
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& r : records_) {
        for (const auto& c : r.accepted) {
            out.emplace_back(r.feedback_id, c);
        }
    }
    return out;
}

std::vector<TrainingText> ActiveLearner::training_data() const
{
    std::vector<TrainingText> out = base_;
    out.reserve(base_.size() + examples_.size());
    for (const auto& ex : examples_) {
        out.push_back(TrainingText{ex.text, ex.positives});
    }
    return out;
}

}  // namespace ctlmap
