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

// Data directory layout:
//
//   events.jsonl                      structured event log
//   reports/<experiment>.json         stored evaluation reports
//   regulations/<reg>/catalog.jsonl   ingested controls
//   archive/<reg>-<ms>/               regulations replaced by a later ingest
//   regulations/<reg>/training-<g>.jsonl  labelled checks of the base model <g>
//   regulations/<reg>/meta.json       base model generation and feedback offset
//                                     (written last: the commit point of training)
//   regulations/<reg>/feedback.jsonl  write-ahead feedback log
//   regulations/<reg>/model-<g>.snap  classifier snapshots

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctlmap/active_learning.hpp"
#include "ctlmap/analysis.hpp"
#include "ctlmap/classifier.hpp"
#include "ctlmap/corpus.hpp"
#include "ctlmap/hybrid.hpp"
#include "ctlmap/index.hpp"

namespace ctlmap {

struct ServiceConfig {
    std::string listen_address = "127.0.0.1:8080";
    std::filesystem::path data_dir = "data";
    FeedbackConfig feedback;
    double default_threshold = 0.5;
    std::optional<std::string> auth_token;
    TrainConfig train;
    MapperConfig mapper;
    // When false, retraining runs inside submit_feedback before it returns.
    bool async_retrain = true;

    void validate() const;
};

struct IngestSummary {
    std::string regulation_id;
    std::size_t loaded = 0;
    std::size_t rejected = 0;  // rows naming a different regulation
    std::vector<std::string> warnings;
    bool replaced = false;
};

struct TrainSummary {
    std::string regulation_id;
    std::size_t examples = 0;
    std::uint64_t model_generation = 0;
    std::uint64_t index_generation = 0;
    double final_loss = 0.0;
    std::vector<std::string> warnings;
};

struct FeedbackAck {
    bool accepted = true;
    std::string regulation_id;
    std::size_t pending = 0;
    std::size_t total_feedback = 0;
    std::uint64_t model_generation = 0;
};

struct RegulationStatus {
    std::string regulation_id;
    std::size_t controls = 0;
    std::size_t training_examples = 0;
    std::uint64_t index_generation = 0;
    std::uint64_t model_generation = 0;
    std::size_t pending_feedback = 0;
    std::size_t total_feedback = 0;
    std::size_t retrain_count = 0;

    bool operator==(const RegulationStatus&) const = default;
};

/// Generation and feedback counters are totals over all regulations.
struct SystemStatus {
    std::size_t regulations_loaded = 0;
    std::uint64_t index_generation = 0;
    std::uint64_t model_generation = 0;
    std::size_t pending_feedback = 0;
    std::size_t total_feedback = 0;
    std::size_t retrain_count = 0;
    bool retrain_in_progress = false;
    double uptime_seconds = 0.0;
    std::vector<RegulationStatus> regulations;

    /// Equality of everything except uptime and the in-progress flag.
    bool same_state(const SystemStatus& other) const;
};

void to_json(nlohmann::json& j, const IngestSummary& s);
void to_json(nlohmann::json& j, const TrainSummary& s);
void to_json(nlohmann::json& j, const FeedbackAck& s);
void to_json(nlohmann::json& j, const RegulationStatus& s);
void to_json(nlohmann::json& j, const SystemStatus& s);

/// All state of a running system, persisted under config.data_dir. Mutations
/// (ingest, train, feedback) are serialized; map, coverage and status read
/// immutable snapshots and never wait for a retrain.
class Workspace {
public:
    /// Opens or creates the data directory and replays every regulation found
    /// there: catalog, training set, feedback log, latest matching model
    /// snapshot (retraining synchronously when it is missing).
    explicit Workspace(ServiceConfig config);
    ~Workspace();

    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    /// Throws DuplicateRegulation when the regulation exists and `replace` is
    /// false. Replacing archives the previous directory and starts afresh.
    IngestSummary ingest_catalog(const std::string& regulation_id,
                                 std::vector<RegulationControl> controls, bool replace = false);
    IngestSummary ingest_catalog(const std::string& regulation_id, std::istream& body,
                                 DataFormat format, bool replace = false);

    /// Builds the index and trains the base classifier on `checks` plus all
    /// feedback received so far. Checks without labels are indexed nowhere
    /// and skipped for training.
    TrainSummary train(const std::string& regulation_id, std::vector<TechspecCheck> checks);
    TrainSummary train(const std::string& regulation_id, std::istream& body, DataFormat format);

    MappingResult map(const MappingQuery& query) const;

    /// An empty regulation_id resolves to the only loaded regulation.
    FeedbackAck submit_feedback(FeedbackRecord record);

    CoverageReport coverage(const std::string& regulation_id) const;
    SystemStatus status() const;

    std::vector<std::string> regulations() const;
    bool has_regulation(const std::string& regulation_id) const;

    /// Blocks until no retrain is queued or running.
    void wait_for_retrain();

    /// Stored evaluation reports (reports/<name>.json).
    void store_report(const std::string& name, const nlohmann::json& report);
    nlohmann::json load_report(const std::string& name) const;
    std::vector<std::string> report_names() const;

    const ServiceConfig& config() const noexcept { return config_; }

private:
    struct View;
    struct Regulation;

    struct QueuedJob {
        std::string regulation_id;
        std::uint64_t epoch = 0;
        RetrainJob job;
    };

    std::filesystem::path regulation_dir(const std::string& regulation_id) const;
    void load_regulation(const std::filesystem::path& dir);
    void install_snapshot(Regulation& reg, std::shared_ptr<const CnnModel> model);
    void publish(Regulation& reg);
    std::shared_ptr<const View> view(const std::string& regulation_id) const;
    Regulation& resolve(const std::string& regulation_id);
    void schedule(Regulation& reg);
    void worker_loop();
    void event(const std::string& type, const nlohmann::json& fields);

    ServiceConfig config_;
    std::chrono::steady_clock::time_point started_;

    mutable std::mutex writer_;  // ingest, train, feedback, install
    std::map<std::string, std::unique_ptr<Regulation>> regs_;
    std::uint64_t next_epoch_ = 1;  // tags retrain jobs; a replaced or retrained
                                    // regulation ignores jobs from older epochs

    mutable std::mutex view_mu_;  // guards the published views only
    std::map<std::string, std::shared_ptr<const View>> views_;

    mutable std::mutex queue_mu_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::deque<QueuedJob> queue_;
    bool running_job_ = false;
    bool stopping_ = false;
    std::thread worker_;

    std::mutex event_mu_;
};

}  // namespace ctlmap
