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

#include "ctlmap/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctlmap/error.hpp"

namespace ctlmap {

namespace fs = std::filesystem;

namespace {

const StopwordList& stopwords()
{
    return StopwordList::english();
}

void write_fd(int fd, std::string_view data, const fs::path& path)
{
    std::size_t off = 0;
    while (off < data.size()) {
        const auto n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw Error(ErrorCode::IoError, "write to " + path.string() + ": " +
                                                std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

// Write to a sibling temporary, flush it to disk, then rename over `path`.
void atomic_write(const fs::path& path, std::string_view data)
{
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + ": " +
                                            std::strerror(errno));
    }
    try {
        write_fd(fd, data, tmp);
        if (::fsync(fd) != 0) {
            throw Error(ErrorCode::IoError, "fsync of " + tmp.string() + " failed");
        }
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "rename to " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string encode_name(const std::string& id)
{
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : id) {
        if (std::isalnum(c) != 0 || c == '-' || c == '_' || c == '.') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    if (out == "." || out == "..") {
        out = "%2E" + out.substr(1);
    }
    return out;
}

std::string snapshot_name(std::uint64_t generation)
{
    return "model-" + std::to_string(generation) + ".snap";
}

void save_snapshot(const fs::path& dir, const CnnModel& model)
{
    std::ostringstream buf(std::ios::binary);
    model.save(buf);
    atomic_write(dir / snapshot_name(model.generation), buf.str());
}

bool valid_report_name(const std::string& name)
{
    if (name.empty() || name.size() > 128 || name.front() == '.') {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::isalnum(c) != 0 || c == '-' || c == '_' || c == '.';
    });
}

struct Meta {
    std::string regulation_id;
    bool trained = false;
    std::uint64_t base_generation = 0;
    std::size_t feedback_at_train = 0;
    std::string training_file;
    TrainConfig train;
};

void to_json(nlohmann::json& j, const Meta& m)
{
    j = nlohmann::json{{"regulation_id", m.regulation_id},
                       {"trained", m.trained},
                       {"base_generation", m.base_generation},
                       {"feedback_at_train", m.feedback_at_train},
                       {"training_file", m.training_file},
                       {"train_config", m.train}};
}

void from_json(const nlohmann::json& j, Meta& m)
{
    j.at("regulation_id").get_to(m.regulation_id);
    m.trained = j.value("trained", false);
    m.base_generation = j.value("base_generation", std::uint64_t{0});
    m.feedback_at_train = j.value("feedback_at_train", std::size_t{0});
    m.training_file = j.value("training_file", std::string{});
    if (j.contains("train_config")) {
        j.at("train_config").get_to(m.train);
    }
}

void write_meta(const fs::path& dir, const Meta& meta)
{
    atomic_write(dir / "meta.json", nlohmann::json(meta).dump(2) + "\n");
}

std::vector<TrainingText> with_feedback(std::vector<TrainingText> base,
                                        std::span<const FeedbackRecord> records)
{
    for (const auto& r : records) {
        base.push_back(TrainingText{r.check_text, r.accepted});
    }
    return base;
}

}  // namespace

// Internal state -------------------------------------------------------------------

struct Workspace::View {
    std::shared_ptr<const ControlCatalog> catalog;
    std::shared_ptr<const InvertedIndex> index;
    std::shared_ptr<const CnnModel> model;
    std::vector<std::pair<std::string, std::string>> accepted;
    RegulationStatus status;
};

struct Workspace::Regulation {
    std::string id;
    fs::path dir;
    std::shared_ptr<const ControlCatalog> catalog;
    std::vector<TechspecCheck> training;
    Meta meta;
    std::unique_ptr<ActiveLearner> learner;
    std::shared_ptr<FeedbackLog> log;
    std::uint64_t epoch = 0;
    std::uint64_t max_generation = 0;  // highest generation installed or scheduled
};

// Status ----------------------------------------------------------------------------

bool SystemStatus::same_state(const SystemStatus& o) const
{
    return regulations_loaded == o.regulations_loaded && index_generation == o.index_generation &&
           model_generation == o.model_generation && pending_feedback == o.pending_feedback &&
           total_feedback == o.total_feedback && retrain_count == o.retrain_count &&
           regulations == o.regulations;
}

void to_json(nlohmann::json& j, const IngestSummary& s)
{
    j = nlohmann::json{{"regulation_id", s.regulation_id},
                       {"loaded", s.loaded},
                       {"rejected", s.rejected},
                       {"warnings", s.warnings},
                       {"replaced", s.replaced}};
}

void to_json(nlohmann::json& j, const TrainSummary& s)
{
    j = nlohmann::json{{"regulation_id", s.regulation_id},
                       {"examples", s.examples},
                       {"model_generation", s.model_generation},
                       {"index_generation", s.index_generation},
                       {"final_loss", s.final_loss},
                       {"warnings", s.warnings}};
}

void to_json(nlohmann::json& j, const FeedbackAck& s)
{
    j = nlohmann::json{{"accepted", s.accepted},
                       {"regulation_id", s.regulation_id},
                       {"pending", s.pending},
                       {"total_feedback", s.total_feedback},
                       {"model_generation", s.model_generation}};
}

void to_json(nlohmann::json& j, const RegulationStatus& s)
{
    j = nlohmann::json{{"regulation_id", s.regulation_id},
                       {"controls", s.controls},
                       {"training_examples", s.training_examples},
                       {"index_generation", s.index_generation},
                       {"model_generation", s.model_generation},
                       {"pending_feedback", s.pending_feedback},
                       {"total_feedback", s.total_feedback},
                       {"retrain_count", s.retrain_count}};
}

void to_json(nlohmann::json& j, const SystemStatus& s)
{
    j = nlohmann::json{{"regulations_loaded", s.regulations_loaded},
                       {"index_generation", s.index_generation},
                       {"model_generation", s.model_generation},
                       {"pending_feedback", s.pending_feedback},
                       {"total_feedback", s.total_feedback},
                       {"retrain_count", s.retrain_count},
                       {"retrain_in_progress", s.retrain_in_progress},
                       {"uptime_seconds", s.uptime_seconds},
                       {"regulations", s.regulations}};
}

void ServiceConfig::validate() const
{
    feedback.validate();
    train.validate();
    if (!(default_threshold >= 0.0 && default_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "default threshold must lie in [0, 1]");
    }
    if (data_dir.empty()) {
        throw Error(ErrorCode::InvalidArgument, "data directory is required");
    }
    if (auth_token && auth_token->empty()) {
        throw Error(ErrorCode::InvalidArgument, "auth token must not be empty");
    }
}

// Lifecycle --------------------------------------------------------------------------

Workspace::Workspace(ServiceConfig config)
    : config_(std::move(config)), started_(std::chrono::steady_clock::now())
{
    config_.validate();
    std::error_code ec;
    fs::create_directories(config_.data_dir / "regulations", ec);
    fs::create_directories(config_.data_dir / "reports", ec);
    if (!fs::is_directory(config_.data_dir / "regulations")) {
        throw Error(ErrorCode::IoError,
                    "data directory " + config_.data_dir.string() + " is not writable");
    }
    {
        std::lock_guard lock(writer_);
        std::vector<fs::path> dirs;
        for (const auto& entry : fs::directory_iterator(config_.data_dir / "regulations")) {
            if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
                dirs.push_back(entry.path());
            }
        }
        std::sort(dirs.begin(), dirs.end());
        for (const auto& dir : dirs) {
            load_regulation(dir);
        }
    }
    if (config_.async_retrain) {
        worker_ = std::thread([this] { worker_loop(); });
    }
}

Workspace::~Workspace()
{
    {
        std::lock_guard lock(queue_mu_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    if (worker_.joinable()) {
        worker_.join();
    }
}

fs::path Workspace::regulation_dir(const std::string& regulation_id) const
{
    return config_.data_dir / "regulations" / encode_name(regulation_id);
}

void Workspace::load_regulation(const fs::path& dir)
{
    auto reg = std::make_unique<Regulation>();
    reg->dir = dir;
    reg->meta = nlohmann::json::parse(read_file(dir / "meta.json")).get<Meta>();
    reg->id = reg->meta.regulation_id;
    reg->catalog = std::make_shared<const ControlCatalog>(
        reg->id, load_control_catalog(dir / "catalog.jsonl", DataFormat::Jsonl));
    if (!reg->meta.training_file.empty()) {
        TechspecLoadOptions opts{reg->catalog.get(), false};
        reg->training =
            load_techspec_dataset(dir / reg->meta.training_file, DataFormat::Jsonl, opts).checks;
    }
    const auto records = FeedbackLog::replay(dir / "feedback.jsonl", true);
    const std::size_t n0 = std::min(reg->meta.feedback_at_train, records.size());
    const auto& meta = reg->meta;

    auto index = std::make_shared<const InvertedIndex>(
        build_mapping_index(*reg->catalog, reg->training, stopwords()));
    const auto base_texts = training_texts(reg->training);

    std::shared_ptr<const CnnModel> base;
    if (meta.trained) {
        const auto snap = dir / snapshot_name(meta.base_generation);
        if (fs::exists(snap)) {
            base = std::make_shared<const CnnModel>(CnnModel::load(snap));
        } else {
            auto model = train_model(
                with_feedback(base_texts, std::span(records).first(n0)),
                reg->catalog->label_order(), meta.train, stopwords());
            model.generation = meta.base_generation;
            save_snapshot(dir, model);
            base = std::make_shared<const CnnModel>(std::move(model));
        }
    }

    reg->learner = std::make_unique<ActiveLearner>(*reg->catalog, index, base, base_texts,
                                                   config_.feedback, meta.train, stopwords());
    std::optional<RetrainJob> last;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            if (i < n0) {
                reg->learner->preload(records[i]);
            } else {
                reg->learner->submit_feedback(records[i]);
                if (auto job = reg->learner->take_retrain_job()) {
                    last = std::move(job);
                }
            }
        } catch (const Error&) {
            ++skipped;
        }
    }
    reg->max_generation = meta.base_generation;
    if (last) {
        reg->max_generation = std::max(reg->max_generation, last->target_generation);
        const auto snap = dir / snapshot_name(last->target_generation);
        std::shared_ptr<const CnnModel> model;
        if (fs::exists(snap)) {
            model = std::make_shared<const CnnModel>(CnnModel::load(snap));
        } else {
            auto trained = last->run(stopwords());
            save_snapshot(dir, *trained);
            model = std::move(trained);
        }
        reg->learner->install(model);
    }
    reg->log = std::make_shared<FeedbackLog>(dir / "feedback.jsonl");
    reg->learner->attach_log(reg->log);
    reg->epoch = next_epoch_++;

    event("replay", {{"regulation_id", reg->id},
                     {"feedback", records.size()},
                     {"skipped", skipped},
                     {"model_generation", reg->learner->state().current_model_generation}});
    auto& slot = regs_[reg->id];
    slot = std::move(reg);
    publish(*slot);
}

// Publication ----------------------------------------------------------------------

void Workspace::publish(Regulation& reg)
{
    auto v = std::make_shared<View>();
    v->catalog = reg.catalog;
    v->index = reg.learner->index();
    v->model = reg.learner->model();
    v->accepted = reg.learner->accepted_mappings();
    const auto& st = reg.learner->state();
    v->status = RegulationStatus{reg.id,
                                 reg.catalog->size(),
                                 reg.training.size(),
                                 v->index->generation(),
                                 st.current_model_generation,
                                 st.pending_since_retrain,
                                 st.total_feedback,
                                 reg.learner->retrains_scheduled()};
    std::lock_guard lock(view_mu_);
    views_[reg.id] = std::move(v);
}

std::shared_ptr<const Workspace::View> Workspace::view(const std::string& regulation_id) const
{
    std::lock_guard lock(view_mu_);
    auto it = views_.find(regulation_id);
    if (it == views_.end()) {
        throw Error(ErrorCode::UnknownRegulation,
                    "regulation '" + regulation_id + "' has not been ingested");
    }
    return it->second;
}

Workspace::Regulation& Workspace::resolve(const std::string& regulation_id)
{
    auto it = regs_.find(regulation_id);
    if (it == regs_.end()) {
        throw Error(ErrorCode::UnknownRegulation,
                    "regulation '" + regulation_id + "' has not been ingested");
    }
    return *it->second;
}

std::vector<std::string> Workspace::regulations() const
{
    std::lock_guard lock(view_mu_);
    std::vector<std::string> out;
    for (const auto& [id, v] : views_) {
        out.push_back(id);
    }
    return out;
}

bool Workspace::has_regulation(const std::string& regulation_id) const
{
    std::lock_guard lock(view_mu_);
    return views_.count(regulation_id) != 0;
}

// Ingestion and training --------------------------------------------------------------

IngestSummary Workspace::ingest_catalog(const std::string& regulation_id, std::istream& body,
                                        DataFormat format, bool replace)
{
    // Report a duplicate before blaming the body for anything.
    if (!replace && has_regulation(regulation_id)) {
        throw Error(ErrorCode::DuplicateRegulation,
                    "regulation '" + regulation_id + "' is already loaded");
    }
    return ingest_catalog(regulation_id, parse_control_catalog(body, format), replace);
}

IngestSummary Workspace::ingest_catalog(const std::string& regulation_id,
                                        std::vector<RegulationControl> controls, bool replace)
{
    if (regulation_id.empty()) {
        throw Error(ErrorCode::MissingField, "regulation_id is required");
    }
    IngestSummary summary;
    summary.regulation_id = regulation_id;
    std::vector<RegulationControl> kept;
    for (auto& c : controls) {
        if (c.regulation_id == regulation_id) {
            kept.push_back(std::move(c));
        } else {
            ++summary.rejected;
            summary.warnings.push_back("control '" + c.control_id + "' belongs to regulation '" +
                                       c.regulation_id + "'");
        }
    }
    if (kept.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "no controls for regulation '" + regulation_id + "'");
    }

    std::lock_guard lock(writer_);
    const auto dir = regulation_dir(regulation_id);
    if (regs_.count(regulation_id) == 0 && fs::exists(dir)) {
        fs::remove_all(dir);  // left behind by an ingest that never committed
    }
    if (regs_.count(regulation_id) != 0) {
        if (!replace) {
            throw Error(ErrorCode::DuplicateRegulation,
                        "regulation '" + regulation_id + "' is already loaded");
        }
        const auto archive = config_.data_dir / "archive";
        fs::create_directories(archive);
        const auto stamp = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
        fs::rename(dir, archive / (encode_name(regulation_id) + "-" + std::to_string(stamp)));
        regs_.erase(regulation_id);
        summary.replaced = true;
    }

    auto reg = std::make_unique<Regulation>();
    reg->id = regulation_id;
    reg->dir = dir;
    reg->catalog = std::make_shared<const ControlCatalog>(regulation_id, std::move(kept));
    reg->meta.regulation_id = regulation_id;
    reg->meta.train = config_.train;
    fs::create_directories(dir);
    {
        std::ostringstream buf;
        write_control_catalog(buf, reg->catalog->controls(), DataFormat::Jsonl);
        atomic_write(dir / "catalog.jsonl", buf.str());
    }
    write_meta(dir, reg->meta);

    auto index = std::make_shared<const InvertedIndex>(
        build_mapping_index(*reg->catalog, {}, stopwords()));
    reg->learner = std::make_unique<ActiveLearner>(*reg->catalog, index, nullptr,
                                                   std::vector<TrainingText>{}, config_.feedback,
                                                   reg->meta.train, stopwords());
    reg->log = std::make_shared<FeedbackLog>(dir / "feedback.jsonl");
    reg->learner->attach_log(reg->log);
    reg->epoch = next_epoch_++;
    summary.loaded = reg->catalog->size();

    auto& slot = regs_[regulation_id];
    slot = std::move(reg);
    publish(*slot);
    event("ingest", {{"regulation_id", regulation_id},
                     {"loaded", summary.loaded},
                     {"rejected", summary.rejected},
                     {"replaced", summary.replaced}});
    return summary;
}

TrainSummary Workspace::train(const std::string& regulation_id, std::istream& body,
                              DataFormat format)
{
    std::shared_ptr<const ControlCatalog> catalog = view(regulation_id)->catalog;
    TechspecLoadOptions opts{catalog.get(), false};
    auto loaded = parse_techspec_dataset(body, format, opts);
    auto summary = train(regulation_id, std::move(loaded.checks));
    summary.warnings.insert(summary.warnings.begin(), loaded.warnings.begin(),
                            loaded.warnings.end());
    return summary;
}

TrainSummary Workspace::train(const std::string& regulation_id, std::vector<TechspecCheck> checks)
{
    std::lock_guard lock(writer_);
    auto& reg = resolve(regulation_id);

    TrainSummary summary;
    summary.regulation_id = regulation_id;
    std::vector<TechspecCheck> labelled;
    for (auto& c : checks) {
        std::vector<std::string> labels;
        for (auto& l : c.labels) {
            if (reg.catalog->contains(l)) {
                labels.push_back(std::move(l));
            } else {
                summary.warnings.push_back("check '" + c.check_id + "': unknown control '" + l +
                                           "' dropped");
            }
        }
        c.labels = std::move(labels);
        if (!c.labels.empty()) {
            labelled.push_back(std::move(c));
        }
    }
    if (labelled.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no labelled checks for '" + regulation_id + "'");
    }

    const auto records = reg.learner->records();
    const std::uint64_t generation =
        std::max(reg.max_generation, reg.learner->state().current_model_generation) + 1;

    auto index = std::make_shared<const InvertedIndex>(
        build_mapping_index(*reg.catalog, labelled, stopwords()));
    auto learner = std::make_unique<ActiveLearner>(*reg.catalog, index, nullptr,
                                                   training_texts(labelled), config_.feedback,
                                                   config_.train, stopwords());
    for (const auto& r : records) {
        learner->preload(r);
    }
    auto model = std::make_shared<CnnModel>(train_model(
        learner->training_data(), reg.catalog->label_order(), config_.train, stopwords()));
    model->generation = generation;
    save_snapshot(reg.dir, *model);

    Meta meta = reg.meta;
    meta.trained = true;
    meta.base_generation = generation;
    meta.feedback_at_train = records.size();
    meta.train = config_.train;
    meta.training_file = "training-" + std::to_string(generation) + ".jsonl";
    {
        std::ostringstream buf;
        write_techspec_dataset(buf, labelled, DataFormat::Jsonl);
        atomic_write(reg.dir / meta.training_file, buf.str());
    }
    write_meta(reg.dir, meta);  // commit point

    learner->install(model);
    learner->attach_log(reg.log);
    reg.learner = std::move(learner);
    reg.meta = std::move(meta);
    reg.training = std::move(labelled);
    reg.epoch = next_epoch_++;
    reg.max_generation = generation;
    publish(reg);

    summary.examples = reg.learner->training_data().size();
    summary.model_generation = generation;
    summary.index_generation = reg.learner->index()->generation();
    summary.final_loss = model->loss_history.empty() ? 0.0 : model->loss_history.back();
    event("train", {{"regulation_id", regulation_id},
                    {"examples", summary.examples},
                    {"model_generation", generation},
                    {"final_loss", summary.final_loss}});
    return summary;
}

// Queries -----------------------------------------------------------------------------

MappingResult Workspace::map(const MappingQuery& query) const
{
    query.validate();
    const auto v = view(query.regulation_id);
    return map_check(query, *v->catalog, *v->index, v->model.get(), stopwords(), config_.mapper);
}

CoverageReport Workspace::coverage(const std::string& regulation_id) const
{
    const auto v = view(regulation_id);
    return coverage_report(*v->catalog, v->accepted, utc_timestamp());
}

SystemStatus Workspace::status() const
{
    SystemStatus s;
    {
        std::lock_guard lock(view_mu_);
        for (const auto& [id, v] : views_) {
            const auto& r = v->status;
            s.regulations.push_back(r);
            s.index_generation += r.index_generation;
            s.model_generation += r.model_generation;
            s.pending_feedback += r.pending_feedback;
            s.total_feedback += r.total_feedback;
            s.retrain_count += r.retrain_count;
        }
    }
    s.regulations_loaded = s.regulations.size();
    {
        std::lock_guard lock(queue_mu_);
        s.retrain_in_progress = running_job_ || !queue_.empty();
    }
    s.uptime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    return s;
}

// Feedback and retraining ---------------------------------------------------------------

FeedbackAck Workspace::submit_feedback(FeedbackRecord record)
{
    std::lock_guard lock(writer_);
    if (record.regulation_id.empty()) {
        if (regs_.size() != 1) {
            throw Error(ErrorCode::InvalidFeedback,
                        "regulation_id is required when " + std::to_string(regs_.size()) +
                            " regulations are loaded");
        }
        record.regulation_id = regs_.begin()->first;
    }
    auto& reg = resolve(record.regulation_id);
    if (record.submitted_at.empty()) {
        record.submitted_at = utc_timestamp();
    }
    const auto id = record.feedback_id;
    reg.learner->submit_feedback(std::move(record));
    event("feedback", {{"regulation_id", reg.id},
                       {"feedback_id", id},
                       {"total_feedback", reg.learner->state().total_feedback}});
    schedule(reg);
    publish(reg);

    const auto& st = reg.learner->state();
    return FeedbackAck{true, reg.id, st.pending_since_retrain, st.total_feedback,
                       st.current_model_generation};
}

void Workspace::schedule(Regulation& reg)
{
    auto job = reg.learner->take_retrain_job();
    if (!job) {
        return;
    }
    reg.max_generation = std::max(reg.max_generation, job->target_generation);
    event("retrain_scheduled", {{"regulation_id", reg.id},
                                {"target_generation", job->target_generation},
                                {"feedback_count", job->feedback_count},
                                {"examples", job->data.size()}});
    if (!config_.async_retrain) {
        try {
            auto model = job->run(stopwords());
            save_snapshot(reg.dir, *model);
            install_snapshot(reg, std::move(model));
        } catch (const std::exception& e) {
            event("retrain_failed", {{"regulation_id", reg.id},
                                     {"target_generation", job->target_generation},
                                     {"error", e.what()}});
        }
        return;
    }
    {
        std::lock_guard lock(queue_mu_);
        queue_.push_back(QueuedJob{reg.id, reg.epoch, std::move(*job)});
    }
    queue_cv_.notify_one();
}

void Workspace::install_snapshot(Regulation& reg, std::shared_ptr<const CnnModel> model)
{
    const auto generation = model->generation;
    const auto loss = model->loss_history.empty() ? 0.0 : model->loss_history.back();
    reg.learner->install(std::move(model));
    publish(reg);
    event("retrain_installed", {{"regulation_id", reg.id},
                                {"model_generation", generation},
                                {"final_loss", loss}});
}

void Workspace::worker_loop()
{
    for (;;) {
        QueuedJob item;
        {
            std::unique_lock lock(queue_mu_);
            queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) {
                return;
            }
            item = std::move(queue_.front());
            queue_.pop_front();
            running_job_ = true;
        }

        std::shared_ptr<CnnModel> model;
        std::string failure;
        try {
            model = item.job.run(stopwords());
        } catch (const std::exception& e) {
            failure = e.what();
        }

        {
            std::lock_guard lock(writer_);
            auto it = regs_.find(item.regulation_id);
            const bool current = it != regs_.end() && it->second->epoch == item.epoch;
            if (!failure.empty()) {
                event("retrain_failed", {{"regulation_id", item.regulation_id},
                                         {"target_generation", item.job.target_generation},
                                         {"error", failure}});
            } else if (current) {
                try {
                    save_snapshot(it->second->dir, *model);
                    install_snapshot(*it->second, std::move(model));
                } catch (const std::exception& e) {
                    event("retrain_failed", {{"regulation_id", item.regulation_id},
                                             {"target_generation", item.job.target_generation},
                                             {"error", e.what()}});
                }
            }
        }

        {
            std::lock_guard lock(queue_mu_);
            running_job_ = false;
        }
        idle_cv_.notify_all();
    }
}

void Workspace::wait_for_retrain()
{
    std::unique_lock lock(queue_mu_);
    idle_cv_.wait(lock, [&] { return stopping_ || (queue_.empty() && !running_job_); });
}

// Reports and events ----------------------------------------------------------------------

void Workspace::store_report(const std::string& name, const nlohmann::json& report)
{
    if (!valid_report_name(name)) {
        throw Error(ErrorCode::InvalidArgument, "invalid experiment name '" + name + "'");
    }
    atomic_write(config_.data_dir / "reports" / (name + ".json"), report.dump(2) + "\n");
}

nlohmann::json Workspace::load_report(const std::string& name) const
{
    const auto path = config_.data_dir / "reports" / (name + ".json");
    if (!valid_report_name(name) || !fs::exists(path)) {
        throw Error(ErrorCode::NotFound, "no stored experiment '" + name + "'");
    }
    return nlohmann::json::parse(read_file(path));
}

std::vector<std::string> Workspace::report_names() const
{
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(config_.data_dir / "reports", ec)) {
        if (entry.path().extension() == ".json") {
            out.push_back(entry.path().stem().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void Workspace::event(const std::string& type, const nlohmann::json& fields)
{
    nlohmann::json line = fields;
    line["type"] = type;
    line["ts"] = utc_timestamp();
    std::lock_guard lock(event_mu_);
    std::ofstream out(config_.data_dir / "events.jsonl", std::ios::app);
    out << line.dump() << '\n';
}

}  // namespace ctlmap
