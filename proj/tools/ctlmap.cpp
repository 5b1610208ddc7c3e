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

// ctlmap: command-line front end. stdout carries data, stderr diagnostics.
// Exit status: 0 success, 1 domain error, 2 usage error.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctlmap/analysis.hpp"
#include "ctlmap/error.hpp"
#include "ctlmap/evaluation.hpp"
#include "ctlmap/http_service.hpp"
#include "ctlmap/plot.hpp"
#include "ctlmap/service.hpp"

namespace {

using namespace ctlmap;

struct Options {
    std::string data_dir = "data";
    bool json = false;

    // classifier
    std::size_t epochs = TrainConfig{}.epochs;
    double learning_rate = TrainConfig{}.learning_rate;
    std::uint64_t seed = TrainConfig{}.seed;
    std::size_t y = FeedbackConfig{}.retrain_interval;
    std::size_t sim_y = FeedbackExperimentConfig{}.y;

    std::string regulation;
    std::string file;
    std::string format;
    bool replace = false;

    // map
    std::string text;
    double threshold = 0.5;
    std::size_t max_hits = 10;

    // feedback
    std::string feedback_id;
    std::vector<std::string> accept;
    std::vector<std::string> reject;
    std::string author;

    // experiments
    std::string catalog;
    std::string backend = "all";
    std::size_t k = 3;
    double test_fraction = 0.15;
    std::size_t iterations = 5;
    std::uint64_t eval_seed = 7;
    bool macro = false;
    std::string plot;
    std::string csv;
    std::string experiment;
    std::string base;
    std::string pool;
    std::string eval_set;

    // serve
    std::string listen = "127.0.0.1:8080";
    std::string auth_token;
    double default_threshold = 0.5;
};

TrainConfig train_config(const Options& o)
{
    TrainConfig c;
    c.epochs = o.epochs;
    c.learning_rate = o.learning_rate;
    c.seed = o.seed;
    return c;
}

ServiceConfig service_config(const Options& o, bool async)
{
    ServiceConfig c;
    c.data_dir = o.data_dir;
    c.feedback.retrain_interval = o.y;
    c.train = train_config(o);
    c.default_threshold = o.default_threshold;
    c.listen_address = o.listen;
    if (!o.auth_token.empty()) {
        c.auth_token = o.auth_token;
    }
    c.async_retrain = async;
    return c;
}

DataFormat format_of(const Options& o, const std::string& path)
{
    if (o.format.empty()) {
        return format_from_path(path);
    }
    if (auto f = parse_format(o.format)) {
        return *f;
    }
    throw CLI::ValidationError("--format", "must be jsonl or csv");
}

std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path);
    }
    return in;
}

void write_text(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content)) {
        throw Error(ErrorCode::IoError, "cannot write " + path);
    }
}

void print_json(const nlohmann::json& j)
{
    std::cout << j.dump(2) << '\n';
}

std::vector<TechspecCheck> load_checks(const Options& o, const std::string& path,
                                       const ControlCatalog& catalog)
{
    TechspecLoadOptions opts{&catalog, false};
    auto result = load_techspec_dataset(path, format_of(o, path), opts);
    for (const auto& w : result.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    return result.checks;
}

ControlCatalog experiment_catalog(const Options& o)
{
    auto controls = load_control_catalog(o.catalog, format_of(o, o.catalog));
    std::string reg = o.regulation;
    if (reg.empty() && !controls.empty()) {
        reg = controls.front().regulation_id;
    }
    ControlCatalog cat(reg, std::move(controls));
    if (cat.empty()) {
        throw Error(ErrorCode::UnknownRegulation,
                    "catalog has no controls for regulation '" + reg + "'");
    }
    return cat;
}

int cmd_ingest(const Options& o)
{
    Workspace ws(service_config(o, false));
    auto in = open_input(o.file);
    const auto summary = ws.ingest_catalog(o.regulation, in, format_of(o, o.file), o.replace);
    if (o.json) {
        print_json(summary);
    } else {
        std::cout << "loaded " << summary.loaded << " controls for " << summary.regulation_id
                  << " (" << summary.rejected << " rejected)\n";
        for (const auto& w : summary.warnings) {
            std::cerr << "warning: " << w << '\n';
        }
    }
    return 0;
}

int cmd_train(const Options& o)
{
    Workspace ws(service_config(o, false));
    auto in = open_input(o.file);
    const auto summary = ws.train(o.regulation, in, format_of(o, o.file));
    if (o.json) {
        print_json(summary);
    } else {
        for (const auto& w : summary.warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        std::cout << "trained " << summary.regulation_id << " on " << summary.examples
                  << " examples: model generation " << summary.model_generation
                  << ", final loss " << summary.final_loss << '\n';
    }
    return 0;
}

int cmd_map(const Options& o)
{
    Workspace ws(service_config(o, false));
    MappingQuery q{o.text, o.regulation, o.threshold, o.max_hits};
    const auto result = ws.map(q);
    if (o.json) {
        print_json(result);
        return 0;
    }
    std::cout << std::left << std::setw(24) << "control_id" << std::setw(12) << "confidence"
              << "provenance\n";
    for (const auto& e : result.entries) {
        std::cout << std::left << std::setw(24) << e.control_id << std::setw(12) << std::fixed
                  << std::setprecision(4) << e.confidence << to_string(e.provenance) << '\n';
    }
    return 0;
}

int cmd_feedback(const Options& o)
{
    Workspace ws(service_config(o, false));
    std::vector<FeedbackRecord> records;
    if (!o.file.empty()) {
        auto in = open_input(o.file);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) {
                records.push_back(nlohmann::json::parse(line).get<FeedbackRecord>());
            }
        }
    } else {
        if (o.feedback_id.empty() || o.text.empty()) {
            throw CLI::ValidationError("feedback", "--id and --text are required without --file");
        }
        FeedbackRecord r;
        r.feedback_id = o.feedback_id;
        r.regulation_id = o.regulation;
        r.check_text = o.text;
        r.accepted = o.accept;
        r.rejected = o.reject;
        r.author = o.author;
        records.push_back(std::move(r));
    }
    auto acks = nlohmann::json::array();
    for (auto& r : records) {
        const auto ack = ws.submit_feedback(std::move(r));
        acks.push_back(ack);
        if (!o.json) {
            std::cout << "recorded feedback for " << ack.regulation_id << ": pending "
                      << ack.pending << ", total " << ack.total_feedback << ", model generation "
                      << ack.model_generation << '\n';
        }
    }
    if (o.json) {
        print_json(acks.size() == 1 ? acks.front() : acks);
    }
    return 0;
}

int cmd_coverage(const Options& o)
{
    Workspace ws(service_config(o, false));
    const auto report = ws.coverage(o.regulation);
    if (o.json) {
        print_json(report);
    } else if (!o.csv.empty()) {
        std::ostringstream out;
        report.write_family_csv(out);
        write_text(o.csv, out.str());
    } else {
        std::cout << report.regulation_id << ": " << report.covered.size() << " of "
                  << report.covered.size() + report.gaps.size() << " controls covered ("
                  << std::fixed << std::setprecision(1) << 100.0 * report.coverage_ratio << "%)\n";
        report.write_family_csv(std::cout);
    }
    return 0;
}

int cmd_status(const Options& o)
{
    Workspace ws(service_config(o, false));
    print_json(ws.status());
    return 0;
}

std::vector<Backend> backends_of(const std::string& name)
{
    if (name == "all") {
        return {Backend::Search, Backend::Cnn, Backend::Hybrid};
    }
    if (auto b = parse_backend(name)) {
        return {*b};
    }
    throw CLI::ValidationError("--backend", "must be search, cnn, hybrid or all");
}

void maybe_store(const Options& o, const nlohmann::json& report)
{
    if (o.experiment.empty()) {
        return;
    }
    Workspace ws(service_config(o, false));
    ws.store_report(o.experiment, report);
}

int cmd_eval(const Options& o)
{
    const auto catalog = experiment_catalog(o);
    const auto data = load_checks(o, o.file, catalog);
    EvalConfig cfg;
    cfg.k = o.k;
    cfg.test_fraction = o.test_fraction;
    cfg.iterations = o.iterations;
    cfg.seed = o.eval_seed;
    cfg.max_hits = o.max_hits;
    cfg.averaging = o.macro ? Averaging::Macro : Averaging::Micro;
    const auto backends = backends_of(o.backend);
    const auto report = threshold_sweep(data, catalog, backends, cfg, train_config(o),
                                        StopwordList::english());
    std::ostringstream csv;
    report.write_csv(csv);
    if (!o.csv.empty()) {
        write_text(o.csv, csv.str());
    }
    if (!o.plot.empty()) {
        write_text(o.plot, plot::threshold_svg(report));
    }
    const nlohmann::json j = report;
    maybe_store(o, j);
    if (o.json) {
        print_json(j);
    } else if (o.csv.empty()) {
        std::cout << csv.str();
    }
    return 0;
}

int cmd_simulate(const Options& o)
{
    const auto catalog = experiment_catalog(o);
    const auto base = load_checks(o, o.base, catalog);
    const auto pool = load_checks(o, o.pool, catalog);
    const auto eval = load_checks(o, o.eval_set, catalog);
    FeedbackExperimentConfig cfg;
    cfg.y = o.sim_y;
    cfg.iterations = o.iterations;
    cfg.threshold = o.threshold;
    cfg.max_hits = o.max_hits;
    cfg.averaging = o.macro ? Averaging::Macro : Averaging::Micro;
    const auto b = backends_of(o.backend == "all" ? "hybrid" : o.backend);
    cfg.backend = b.front();
    const auto result = simulate_feedback_experiment(base, pool, eval, catalog, cfg,
                                                     train_config(o), StopwordList::english());
    std::ostringstream csv;
    result.write_csv(csv);
    if (!o.csv.empty()) {
        write_text(o.csv, csv.str());
    }
    if (!o.plot.empty()) {
        write_text(o.plot, plot::feedback_svg(result));
    }
    const nlohmann::json j = result;
    maybe_store(o, j);
    if (o.json) {
        print_json(j);
    } else if (o.csv.empty()) {
        std::cout << csv.str();
    }
    return 0;
}

HttpService* g_service = nullptr;

extern "C" void on_signal(int)
{
    if (g_service != nullptr) {
        g_service->stop();
    }
}

int cmd_serve(const Options& o)
{
    Workspace ws(service_config(o, true));
    HttpService http(ws);
    const auto [host, port] = parse_listen_address(o.listen);
    const int bound = http.bind(host, port);
    if (o.json) {
        std::cout << nlohmann::json{{"listening", host + ":" + std::to_string(bound)}}.dump()
                  << std::endl;
    } else {
        std::cerr << "listening on " << host << ':' << bound << std::endl;
    }
    g_service = &http;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    http.serve();
    g_service = nullptr;
    return 0;
}

void add_train_flags(CLI::App* cmd, Options& o, std::size_t& y)
{
    cmd->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--learning-rate", o.learning_rate, "Adam learning rate")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "Classifier seed");
    cmd->add_option("--y", y, "Retrain after this many feedback records")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ctlmap: map technical checks to regulation controls"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read defaults from a key=value config file");
    Options o;
    if (const char* env = std::getenv("DATA_DIR"); env != nullptr && *env != '\0') {
        o.data_dir = env;
    }
    app.add_option("--data-dir", o.data_dir, "Data directory (env DATA_DIR)");
    app.add_flag("--json", o.json, "Machine-readable output");

    auto* ingest = app.add_subcommand("ingest", "Load a regulation control catalog");
    ingest->add_option("--catalog,--file", o.file, "Catalog file (.jsonl or .csv)")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--regulation", o.regulation, "Regulation id")->required();
    ingest->add_option("--format", o.format, "jsonl or csv (default: by extension)");
    ingest->add_flag("--replace", o.replace, "Replace an already loaded regulation");

    auto* train = app.add_subcommand("train", "Index and train on labelled checks");
    train->add_option("--data,--file", o.file, "Labelled checks")->required()->check(
        CLI::ExistingFile);
    train->add_option("--regulation", o.regulation, "Regulation id")->required();
    train->add_option("--format", o.format, "jsonl or csv");
    add_train_flags(train, o, o.y);

    auto* map = app.add_subcommand("map", "Map one check text to controls");
    map->add_option("--text", o.text, "Check text")->required();
    map->add_option("--regulation", o.regulation, "Regulation id")->required();
    map->add_option("--threshold", o.threshold, "Minimum confidence")
        ->check(CLI::Range(0.0, 1.0));
    map->add_option("--max-hits", o.max_hits, "Search hits per query")->check(CLI::PositiveNumber);

    auto* feedback = app.add_subcommand("feedback", "Record expert verdicts");
    feedback->add_option("--id", o.feedback_id, "Feedback id");
    feedback->add_option("--text", o.text, "Check text");
    feedback->add_option("--regulation", o.regulation, "Regulation id");
    feedback->add_option("--accept", o.accept, "Accepted control ids")->delimiter(',');
    feedback->add_option("--reject", o.reject, "Rejected control ids")->delimiter(',');
    feedback->add_option("--author", o.author, "Reviewer");
    feedback->add_option("--file", o.file, "JSONL file of feedback records")
        ->check(CLI::ExistingFile);
    feedback->add_option("--y", o.y, "Retrain interval")->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("eval", "Threshold sweep with held-out evaluation");
    eval->add_option("--data", o.file, "Labelled checks")->required()->check(CLI::ExistingFile);
    eval->add_option("--catalog", o.catalog, "Control catalog")->required()->check(
        CLI::ExistingFile);
    eval->add_option("--regulation", o.regulation, "Regulation id (default: from catalog)");
    eval->add_option("--format", o.format, "jsonl or csv");
    eval->add_option("--backend", o.backend, "search, cnn, hybrid or all");
    eval->add_option("--k", o.k, "Fold count")->check(CLI::Range(2, 1000));
    eval->add_option("--test-fraction", o.test_fraction,
                     "Held-out share (<= 0 holds out one of k folds)")
        ->check(CLI::Range(-1.0, 0.99));
    eval->add_option("--iterations", o.iterations, "Reseeded runs to average")
        ->check(CLI::PositiveNumber);
    eval->add_option("--eval-seed", o.eval_seed, "Split seed");
    eval->add_option("--max-hits", o.max_hits, "Search hits per query")->check(CLI::PositiveNumber);
    eval->add_flag("--macro", o.macro, "Macro instead of micro averaging");
    eval->add_option("--plot", o.plot, "Write an SVG plot here");
    eval->add_option("--csv", o.csv, "Write the CSV here instead of stdout");
    eval->add_option("--experiment", o.experiment, "Store the report under this name");
    add_train_flags(eval, o, o.y);

    auto* sim = app.add_subcommand("simulate-feedback", "Replay a feedback pool in batches of y");
    sim->add_option("--pool", o.pool, "Feedback pool checks")->required()->check(
        CLI::ExistingFile);
    sim->add_option("--base", o.base, "Initial training checks")->required()->check(
        CLI::ExistingFile);
    sim->add_option("--eval", o.eval_set, "Evaluation checks")->required()->check(
        CLI::ExistingFile);
    sim->add_option("--catalog", o.catalog, "Control catalog")->required()->check(
        CLI::ExistingFile);
    sim->add_option("--regulation", o.regulation, "Regulation id (default: from catalog)");
    sim->add_option("--format", o.format, "jsonl or csv");
    sim->add_option("--iterations", o.iterations, "Feedback batches")->check(CLI::PositiveNumber);
    sim->add_option("--threshold", o.threshold, "Decision threshold")
        ->check(CLI::Range(0.0, 1.0));
    sim->add_option("--backend", o.backend, "search, cnn or hybrid");
    sim->add_option("--max-hits", o.max_hits, "Search hits per query")->check(CLI::PositiveNumber);
    sim->add_flag("--macro", o.macro, "Macro instead of micro averaging");
    sim->add_option("--plot", o.plot, "Write an SVG plot here");
    sim->add_option("--csv", o.csv, "Write the CSV here instead of stdout");
    sim->add_option("--experiment", o.experiment, "Store the report under this name");
    add_train_flags(sim, o, o.sim_y);

    auto* coverage = app.add_subcommand("coverage", "Coverage and gap report");
    coverage->add_option("--regulation", o.regulation, "Regulation id")->required();
    coverage->add_option("--csv", o.csv, "Write the per-family CSV here");

    auto* status = app.add_subcommand("status", "System status");

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--listen", o.listen, "host:port");
    serve->add_option("--auth-token", o.auth_token, "Bearer token required for catalog, training and feedback writes");
    serve->add_option("--default-threshold", o.default_threshold,
                      "Threshold when a query omits one")
        ->check(CLI::Range(0.0, 1.0));
    serve->add_option("--y", o.y, "Retrain interval")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(o);
        if (train->parsed()) return cmd_train(o);
        if (map->parsed()) return cmd_map(o);
        if (feedback->parsed()) return cmd_feedback(o);
        if (eval->parsed()) return cmd_eval(o);
        if (sim->parsed()) return cmd_simulate(o);
        if (coverage->parsed()) return cmd_coverage(o);
        if (status->parsed()) return cmd_status(o);
        if (serve->parsed()) return cmd_serve(o);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: ParseError: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
