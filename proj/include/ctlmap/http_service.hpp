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

// JSON over HTTP, versioned under /v1:
//
//   POST /v1/catalogs?regulation_id=R[&format=jsonl|csv][&replace=true]   raw catalog body
//   POST /v1/training?regulation_id=R[&format=jsonl|csv]                  raw check dataset
//   POST /v1/map                      MappingQuery            -> MappingResult
//   POST /v1/feedback                 FeedbackRecord          -> {accepted, pending, model_generation}
//   GET  /v1/coverage?regulation=R[&format=csv]               -> CoverageReport
//   GET  /v1/status                                           -> SystemStatus
//   GET  /v1/metrics[?experiment=E]                           -> stored report or name list
//   GET  /v1/regulations                                      -> loaded regulation ids
//
// Errors are {code, message, details}. With an auth token configured, every
// POST needs `Authorization: Bearer <token>`.

#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ctlmap/error.hpp"
#include "ctlmap/service.hpp"

namespace ctlmap {

int http_status(ErrorCode code) noexcept;
nlohmann::json error_body(const Error& error);

class HttpService {
public:
    explicit HttpService(Workspace& workspace);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds host:port (port 0 picks a free one) and returns the bound port.
    /// Throws IoError when binding fails.
    int bind(const std::string& host, int port);

    /// Serves until stop(). Requires bind().
    void serve();

    /// bind() then serve() on a background thread.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Splits "host:port". Throws InvalidArgument.
std::pair<std::string, int> parse_listen_address(const std::string& address);

}  // namespace ctlmap
