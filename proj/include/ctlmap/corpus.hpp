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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ctlmap {

/// One control of a target regulation. Controls form the label space.
struct RegulationControl {
    std::string regulation_id;
    std::string control_id;
    std::string family;
    std::string title;
    std::string text;

    bool operator==(const RegulationControl&) const = default;
};

/// One techspec check. `labels` is kept sorted and free of duplicates.
struct TechspecCheck {
    std::string check_id;
    std::string title;
    std::string description;
    std::string rationale;
    std::string fix;
    std::string source;
    std::vector<std::string> labels;

    bool operator==(const TechspecCheck&) const = default;
};

struct TokenStream {
    std::vector<std::string> tokens;
    std::size_t origin_len = 0;  // tokens before stopword filtering

    /// Tokens joined by single spaces.
    std::string joined() const;
    bool empty() const noexcept { return tokens.empty(); }
};

class StopwordList {
public:
    StopwordList() = default;
    StopwordList(std::unordered_set<std::string> words, std::string version);

    /// The bundled English list. Its version string is recorded in every model
    /// snapshot so preprocessing can be reproduced.
    static const StopwordList& english();

    /// One word per line; blank lines and lines starting with '#' are ignored.
    static StopwordList from_file(const std::filesystem::path& path, std::string version);

    bool contains(std::string_view word) const;
    const std::string& version() const noexcept { return version_; }
    std::size_t size() const noexcept { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
    std::string version_;
};

/// Tokenizes, lowercases, and drops stopwords. Token characters are letters and
/// digits (ASCII, plus non-ASCII letters decoded from UTF-8); everything else,
/// including invalid UTF-8 bytes, separates tokens.
TokenStream preprocess(std::string_view text, const StopwordList& stopwords);

/// Title, description, rationale and fix joined by single spaces, empty fields
/// skipped.
std::string build_specification_text(const TechspecCheck& check);

enum class DataFormat { Jsonl, Csv };

/// Picks the format from the file extension (".csv" is CSV, anything else JSONL).
DataFormat format_from_path(const std::filesystem::path& path);
std::optional<DataFormat> parse_format(std::string_view name);

std::vector<RegulationControl> parse_control_catalog(std::istream& in, DataFormat format);
std::vector<RegulationControl> load_control_catalog(const std::filesystem::path& path,
                                                    DataFormat format);
void write_control_catalog(std::ostream& out, std::span<const RegulationControl> controls,
                           DataFormat format);

/// The controls of a single regulation, in ascending control_id order. The
/// position of a control in `controls()` is its label index.
class ControlCatalog {
public:
    ControlCatalog() = default;
    ControlCatalog(std::string regulation_id, std::vector<RegulationControl> controls);

    const std::string& regulation_id() const noexcept { return regulation_id_; }
    const std::vector<RegulationControl>& controls() const noexcept { return controls_; }
    std::size_t size() const noexcept { return controls_.size(); }
    bool empty() const noexcept { return controls_.empty(); }

    bool contains(std::string_view control_id) const;
    std::optional<std::size_t> index_of(std::string_view control_id) const;
    const RegulationControl* find(std::string_view control_id) const;
    std::vector<std::string> label_order() const;

private:
    std::string regulation_id_;
    std::vector<RegulationControl> controls_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

struct TechspecLoadResult {
    std::vector<TechspecCheck> checks;
    std::vector<std::string> warnings;  // unresolved labels and similar
};

struct TechspecLoadOptions {
    const ControlCatalog* catalog = nullptr;  // when set, labels are resolved against it
    bool strict = false;                      // escalate unresolved labels to UnknownLabel
};

TechspecLoadResult parse_techspec_dataset(std::istream& in, DataFormat format,
                                          const TechspecLoadOptions& options = {});
TechspecLoadResult load_techspec_dataset(const std::filesystem::path& path, DataFormat format,
                                         const TechspecLoadOptions& options = {});
void write_techspec_dataset(std::ostream& out, std::span<const TechspecCheck> checks,
                            DataFormat format);

}  // namespace ctlmap
