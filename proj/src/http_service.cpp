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

#include "ctlmap/http_service.hpp"

#include <functional>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace ctlmap {

int http_status(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::DuplicateControlId:
    case ErrorCode::MissingField:
    case ErrorCode::UnknownLabel:
    case ErrorCode::DuplicateDocId:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::EmptyTrainingSet:
        return 400;
    case ErrorCode::UnknownRegulation:
    case ErrorCode::UnknownDocId:
    case ErrorCode::NotFound:
        return 404;
    case ErrorCode::DuplicateRegulation:
    case ErrorCode::DuplicateFeedbackId:
    case ErrorCode::EmptyIndex:
    case ErrorCode::ModelNotTrained:
        return 409;
    case ErrorCode::InvalidFeedback:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DatasetTooSmall:
    case ErrorCode::PoolSizeMismatch:
    case ErrorCode::ShapeMismatch:
        return 422;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::IoError:
        return 500;
    }
    return 500;
}

nlohmann::json error_body(const Error& error)
{
    nlohmann::json details = nlohmann::json::object();
    if (error.line() != 0) {
        details["line"] = error.line();
    }
    return nlohmann::json{
        {"code", to_string(error.code())}, {"message", error.detail()}, {"details", details}};
}

std::pair<std::string, int> parse_listen_address(const std::string& address)
{
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
        throw Error(ErrorCode::InvalidArgument, "listen address must be host:port");
    }
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(address.substr(colon + 1), &used);
        if (used != address.size() - colon - 1) {
            throw std::invalid_argument("trailing characters");
        }
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bad port in '" + address + "'");
    }
    if (port < 0 || port > 65535) {
        throw Error(ErrorCode::InvalidArgument, "port out of range in '" + address + "'");
    }
    return {address.substr(0, colon), port};
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e)
{
    send_json(res, http_status(e.code()), error_body(e));
}

DataFormat body_format(const httplib::Request& req)
{
    if (req.has_param("format")) {
        const auto f = parse_format(req.get_param_value("format"));
        if (!f) {
            throw Error(ErrorCode::InvalidArgument,
                        "format must be jsonl or csv, got '" + req.get_param_value("format") + "'");
        }
        return *f;
    }
    const auto type = req.get_header_value("Content-Type");
    return type.find("csv") != std::string::npos ? DataFormat::Csv : DataFormat::Jsonl;
}

std::string required_param(const httplib::Request& req, std::initializer_list<const char*> names)
{
    for (const char* n : names) {
        if (req.has_param(n) && !req.get_param_value(n).empty()) {
            return req.get_param_value(n);
        }
    }
    throw Error(ErrorCode::MissingField,
                std::string("query parameter '") + *names.begin() + "' is required");
}

nlohmann::json parse_body(const httplib::Request& req)
{
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
    }
}

}  // namespace

struct HttpService::Impl {
    Workspace& ws;
    httplib::Server server;
    std::thread thread;
    bool bound = false;

    explicit Impl(Workspace& w) : ws(w) { routes(); }

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    httplib::Server::Handler guarded(Handler h, bool write)
    {
        return [this, h = std::move(h), write](const httplib::Request& req,
                                               httplib::Response& res) {
            if (write && ws.config().auth_token) {
                if (req.get_header_value("Authorization") != "Bearer " + *ws.config().auth_token) {
                    send_json(res, 401,
                              {{"code", "Unauthorized"},
                               {"message", "missing or wrong bearer token"},
                               {"details", nlohmann::json::object()}});
                    return;
                }
            }
            try {
                h(req, res);
            } catch (const Error& e) {
                send_error(res, e);
            } catch (const nlohmann::json::exception& e) {
                send_error(res, Error(ErrorCode::ParseError, e.what()));
            } catch (const std::exception& e) {
                send_json(res, 500,
                          {{"code", "InternalError"},
                           {"message", e.what()},
                           {"details", nlohmann::json::object()}});
            }
        };
    }

    void routes()
    {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.status = 204;
        });

        server.Post("/v1/catalogs", guarded(
                                        [this](const httplib::Request& req, httplib::Response& res) {
                                            const auto reg = required_param(req, {"regulation_id"});
                                            const bool replace = req.has_param("replace") &&
                                                                 req.get_param_value("replace") ==
                                                                     "true";
                                            std::istringstream body(req.body);
                                            const auto summary = ws.ingest_catalog(
                                                reg, body, body_format(req), replace);
                                            send_json(res, 200, summary);
                                        },
                                        true));

        server.Post("/v1/training",
                    guarded(
                        [this](const httplib::Request& req, httplib::Response& res) {
                            const auto reg = required_param(req, {"regulation_id", "regulation"});
                            std::istringstream body(req.body);
                            send_json(res, 200, ws.train(reg, body, body_format(req)));
                        },
                        true));

        server.Post("/v1/map", guarded(
                                   [this](const httplib::Request& req, httplib::Response& res) {
                                       const auto body = parse_body(req);
                                       auto query = body.get<MappingQuery>();
                                       if (!body.contains("threshold")) {
                                           query.threshold = ws.config().default_threshold;
                                       }
                                       send_json(res, 200, ws.map(query));
                                   },
                                   false));

        server.Post("/v1/feedback",
                    guarded(
                        [this](const httplib::Request& req, httplib::Response& res) {
                            auto record = parse_body(req).get<FeedbackRecord>();
                            send_json(res, 200, ws.submit_feedback(std::move(record)));
                        },
                        true));

        server.Get("/v1/coverage",
                   guarded(
                       [this](const httplib::Request& req, httplib::Response& res) {
                           const auto reg = required_param(req, {"regulation", "regulation_id"});
                           const auto report = ws.coverage(reg);
                           if (req.has_param("format") && req.get_param_value("format") == "csv") {
                               std::ostringstream out;
                               report.write_family_csv(out);
                               res.set_content(out.str(), "text/csv");
                               return;
                           }
                           send_json(res, 200, report);
                       },
                       false));

        server.Get("/v1/status", guarded(
                                     [this](const httplib::Request&, httplib::Response& res) {
                                         send_json(res, 200, ws.status());
                                     },
                                     false));

        server.Get("/v1/regulations",
                   guarded(
                       [this](const httplib::Request&, httplib::Response& res) {
                           send_json(res, 200, {{"regulations", ws.regulations()}});
                       },
                       false));

        server.Get("/v1/metrics",
                   guarded(
                       [this](const httplib::Request& req, httplib::Response& res) {
                           if (!req.has_param("experiment")) {
                               send_json(res, 200, {{"experiments", ws.report_names()}});
                               return;
                           }
                           send_json(res, 200, ws.load_report(req.get_param_value("experiment")));
                       },
                       false));

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty() && res.status == 404) {
                send_json(res, 404,
                          {{"code", "NotFound"},
                           {"message", "no such endpoint"},
                           {"details", nlohmann::json::object()}});
            }
        });
    }
};

HttpService::HttpService(Workspace& workspace) : impl_(std::make_unique<Impl>(workspace)) {}

HttpService::~HttpService()
{
    stop();
}

int HttpService::bind(const std::string& host, int port)
{
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) {
        throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->bound = true;
    return bound;
}

void HttpService::serve()
{
    if (!impl_->bound) {
        throw Error(ErrorCode::InvalidArgument, "serve() before bind()");
    }
    impl_->server.listen_after_bind();
}

int HttpService::start(const std::string& host, int port)
{
    const int bound = bind(host, port);
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpService::stop()
{
    if (!impl_) {
        return;
    }
    impl_->server.stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

}  // namespace ctlmap
