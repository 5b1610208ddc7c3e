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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctlmap {

enum class ErrorCode {
    ParseError,
    DuplicateControlId,
    MissingField,
    UnknownLabel,
    DuplicateDocId,
    EmptyCorpus,
    UnknownDocId,
    EmptyIndex,
    EmptyTrainingSet,
    ShapeMismatch,
    NonFiniteLoss,
    ModelNotTrained,
    UnknownRegulation,
    DuplicateRegulation,
    InvalidFeedback,
    DuplicateFeedbackId,
    DatasetTooSmall,
    PoolSizeMismatch,
    InvalidArgument,
    IoError,
    NotFound,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every domain failure in the library is reported through this type. `line()`
/// is the 1-based input line for ingestion errors and 0 otherwise.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::size_t line = 0)
        : std::runtime_error(format(code, message, line)), code_(code), line_(line),
          detail_(message)
    {}

    ErrorCode code() const noexcept { return code_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    static std::string format(ErrorCode code, const std::string& message, std::size_t line)
    {
        std::string out(to_string(code));
        if (line != 0) {
            out += " (line " + std::to_string(line) + ")";
        }
        if (!message.empty()) {
            out += ": " + message;
        }
        return out;
    }

    ErrorCode code_;
    std::size_t line_;
    std::string detail_;
};

inline std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateControlId: return "DuplicateControlId";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnknownDocId: return "UnknownDocId";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ModelNotTrained: return "ModelNotTrained";
    case ErrorCode::UnknownRegulation: return "UnknownRegulation";
    case ErrorCode::DuplicateRegulation: return "DuplicateRegulation";
    case ErrorCode::InvalidFeedback: return "InvalidFeedback";
    case ErrorCode::DuplicateFeedbackId: return "DuplicateFeedbackId";
    case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::PoolSizeMismatch: return "PoolSizeMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NotFound: return "NotFound";
    }
    return "Unknown";
}

}  // namespace ctlmap
