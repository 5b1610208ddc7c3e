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

#include "ctlmap/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctlmap/csv.hpp"
#include "ctlmap/error.hpp"

namespace ctlmap {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kEnglishStopwords[] = {
    "a",       "about",   "above",   "after",     "again",      "against", "all",     "also",
    "am",      "an",      "and",     "any",       "are",        "as",      "at",      "be",
    "because", "been",    "before",  "being",     "below",      "between", "both",    "but",
    "by",      "can",     "could",   "did",       "do",         "does",    "doing",   "down",
    "during",  "each",    "few",     "for",       "from",       "further", "had",     "has",
    "have",    "having",  "he",      "her",       "here",       "hers",    "herself", "him",
    "himself", "his",     "how",     "i",         "if",         "in",      "into",    "is",
    "it",      "its",     "itself",  "just",      "may",        "me",      "might",   "more",
    "most",    "must",    "my",      "myself",    "no",         "nor",     "not",     "now",
    "of",      "off",     "on",      "once",      "only",       "or",      "other",   "our",
    "ours",    "ourselves", "out",   "over",      "own",        "same",    "shall",   "she",
    "should",  "so",      "some",    "such",      "than",       "that",    "the",     "their",
    "theirs",  "them",    "themselves", "then",   "there",      "these",   "they",    "this",
    "those",   "through", "to",      "too",       "under",      "until",   "up",      "upon",
    "very",    "was",     "we",      "were",      "what",       "when",    "where",   "whether",
    "which",   "while",   "who",     "whom",      "why",        "will",    "with",    "would",
    "you",     "your",    "yours",   "yourself",  "yourselves",
};

constexpr std::string_view kEnglishVersion = "en-1";

// Decodes one UTF-8 sequence starting at `i`. Returns false for malformed input
// and advances `i` past the offending byte.
bool decode_utf8(std::string_view s, std::size_t& i, char32_t& cp)
{
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        cp = b0;
        ++i;
        return true;
    }
    std::size_t len = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
        min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
        min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
        min = 0x10000;
    } else {
        ++i;
        return false;
    }
    if (i + len > s.size()) {
        ++i;
        return false;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return false;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        return false;
    }
    i += len;
    return true;
}

void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_token_char(char32_t cp)
{
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    }
    if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) {
        return false;  // C1 controls, Latin-1 punctuation and symbols
    }
    if (cp == 0x1680 || cp == 0x180E || cp == 0xFEFF) {
        return false;
    }
    if ((cp >= 0x2000 && cp <= 0x2BFF) || (cp >= 0x2E00 && cp <= 0x2E7F) ||
        (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFE30 && cp <= 0xFE4F) ||
        (cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65) ||
        (cp >= 0xFFF0 && cp <= 0xFFFF) || (cp >= 0xE000 && cp <= 0xF8FF)) {
        return false;
    }
    return true;
}

char32_t to_lower(char32_t cp)
{
    if (cp >= 'A' && cp <= 'Z') {
        return cp + 0x20;
    }
    if (cp < 0xC0) {
        return cp;
    }
    if (cp <= 0xDE && cp != 0xD7) {
        return cp + 0x20;
    }
    if (cp >= 0x100 && cp <= 0x17F) {
        if (cp == 0x130) {
            return U'i';
        }
        if (cp == 0x178) {
            return 0xFF;
        }
        const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
        if (odd_upper) {
            return (cp % 2 == 1) ? cp + 1 : cp;
        }
        if (cp == 0x138 || cp == 0x149 || cp == 0x17F) {
            return cp;
        }
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) {
        return cp + 0x20;
    }
    if (cp >= 0x410 && cp <= 0x42F) {
        return cp + 0x20;
    }
    if (cp >= 0x400 && cp <= 0x40F) {
        return cp + 0x50;
    }
    return cp;
}

// JSON helpers ----------------------------------------------------------------

std::string get_string(const ojson& obj, const char* key, std::size_t line, bool required)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) {
            throw Error(ErrorCode::MissingField, std::string("missing field '") + key + "'", line);
        }
        return {};
    }
    if (!it->is_string()) {
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string",
                    line);
    }
    return it->get<std::string>();
}

template <typename Fn>
void for_each_jsonl(std::istream& in, Fn&& fn)
{
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') {
            text.pop_back();
        }
        if (text.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        ojson obj;
        try {
            obj = ojson::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::ParseError, e.what(), line);
        }
        if (!obj.is_object()) {
            throw Error(ErrorCode::ParseError, "expected a JSON object", line);
        }
        fn(obj, line);
    }
}

// Maps CSV header names to column positions and returns cells by name.
class CsvTable {
public:
    explicit CsvTable(std::istream& in) : records_(csv::parse(in))
    {
        if (records_.empty()) {
            throw Error(ErrorCode::ParseError, "missing CSV header row", 1);
        }
        const auto& header = records_.front().fields;
        for (std::size_t i = 0; i < header.size(); ++i) {
            columns_.emplace(header[i], i);
        }
    }

    bool has_column(const std::string& name) const { return columns_.count(name) != 0; }

    std::size_t rows() const { return records_.size() - 1; }
    std::size_t line(std::size_t row) const { return records_[row + 1].line; }

    std::string cell(std::size_t row, const std::string& name, bool required) const
    {
        const auto& rec = records_[row + 1];
        auto it = columns_.find(name);
        if (it == columns_.end()) {
            if (required) {
                throw Error(ErrorCode::MissingField, "missing column '" + name + "'", rec.line);
            }
            return {};
        }
        if (rec.fields.size() != records_.front().fields.size()) {
            throw Error(ErrorCode::ParseError,
                        "expected " + std::to_string(records_.front().fields.size()) +
                            " fields, found " + std::to_string(rec.fields.size()),
                        rec.line);
        }
        std::string value = rec.fields[it->second];
        if (required && value.empty()) {
            throw Error(ErrorCode::MissingField, "empty field '" + name + "'", rec.line);
        }
        return value;
    }

private:
    std::vector<csv::Record> records_;
    std::map<std::string, std::size_t> columns_;
};

std::string default_family(const std::string& control_id)
{
    auto pos = control_id.find('-');
    return pos == std::string::npos ? control_id : control_id.substr(0, pos);
}

void validate_control(RegulationControl& c, std::size_t line)
{
    if (c.regulation_id.empty()) {
        throw Error(ErrorCode::MissingField, "missing field 'regulation_id'", line);
    }
    if (c.control_id.empty()) {
        throw Error(ErrorCode::MissingField, "missing field 'control_id'", line);
    }
    if (c.family.empty()) {
        c.family = default_family(c.control_id);
    }
    if (preprocess(c.text, StopwordList::english()).empty()) {
        throw Error(ErrorCode::MissingField, "control text is empty after preprocessing", line);
    }
}

std::vector<std::string> normalize_labels(std::vector<std::string> labels)
{
    for (auto& l : labels) {
        auto b = l.find_first_not_of(" \t");
        auto e = l.find_last_not_of(" \t");
        l = b == std::string::npos ? std::string{} : l.substr(b, e - b + 1);
    }
    std::erase_if(labels, [](const std::string& l) { return l.empty(); });
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

std::vector<std::string> split_labels(const std::string& cell)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : cell) {
        if (c == ';') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

void validate_check(TechspecCheck& check, std::size_t line, const TechspecLoadOptions& options,
                    std::vector<std::string>& warnings)
{
    if (check.check_id.empty()) {
        throw Error(ErrorCode::MissingField, "missing field 'check_id'", line);
    }
    if (check.title.empty() && check.description.empty()) {
        throw Error(ErrorCode::MissingField, "check needs a title or a description", line);
    }
    check.labels = normalize_labels(std::move(check.labels));
    if (options.catalog == nullptr) {
        return;
    }
    std::vector<std::string> resolved;
    for (auto& label : check.labels) {
        if (options.catalog->contains(label)) {
            resolved.push_back(label);
            continue;
        }
        if (options.strict) {
            throw Error(ErrorCode::UnknownLabel,
                        "check '" + check.check_id + "' references unknown control '" + label + "'",
                        line);
        }
        warnings.push_back("line " + std::to_string(line) + ": check '" + check.check_id +
                           "' references unknown control '" + label + "' (dropped)");
    }
    check.labels = std::move(resolved);
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    return in;
}

}  // namespace

// Tokens ---------------------------------------------------------------------

std::string TokenStream::joined() const
{
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i != 0) {
            out.push_back(' ');
        }
        out += tokens[i];
    }
    return out;
}

StopwordList::StopwordList(std::unordered_set<std::string> words, std::string version)
    : version_(std::move(version))
{
    for (const auto& w : words) {
        words_.insert(preprocess(w, StopwordList{}).joined());
    }
    words_.erase(std::string{});
}

const StopwordList& StopwordList::english()
{
    static const StopwordList list = [] {
        StopwordList l;
        l.version_ = std::string(kEnglishVersion);
        for (const char* w : kEnglishStopwords) {
            l.words_.insert(w);
        }
        return l;
    }();
    return list;
}

StopwordList StopwordList::from_file(const std::filesystem::path& path, std::string version)
{
    auto in = open_input(path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        words.insert(line);
    }
    return StopwordList(std::move(words), std::move(version));
}

bool StopwordList::contains(std::string_view word) const
{
    return words_.find(std::string(word)) != words_.end();
}

TokenStream preprocess(std::string_view text, const StopwordList& stopwords)
{
    TokenStream out;
    std::string current;
    auto flush = [&] {
        if (current.empty()) {
            return;
        }
        ++out.origin_len;
        if (!stopwords.contains(current)) {
            out.tokens.push_back(current);
        }
        current.clear();
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = 0;
        if (!decode_utf8(text, i, cp) || !is_token_char(cp)) {
            flush();
            continue;
        }
        append_utf8(current, to_lower(cp));
    }
    flush();
    return out;
}

std::string build_specification_text(const TechspecCheck& check)
{
    std::string out;
    for (const std::string* part : {&check.title, &check.description, &check.rationale, &check.fix}) {
        if (part->empty()) {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += *part;
    }
    return out;
}

DataFormat format_from_path(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".csv" ? DataFormat::Csv : DataFormat::Jsonl;
}

std::optional<DataFormat> parse_format(std::string_view name)
{
    if (name == "jsonl" || name == "json") {
        return DataFormat::Jsonl;
    }
    if (name == "csv") {
        return DataFormat::Csv;
    }
    return std::nullopt;
}

// Control catalogs -------------------------------------------------------------

std::vector<RegulationControl> parse_control_catalog(std::istream& in, DataFormat format)
{
    std::vector<RegulationControl> out;
    std::set<std::pair<std::string, std::string>> seen;

    auto accept = [&](RegulationControl c, std::size_t line) {
        validate_control(c, line);
        if (!seen.emplace(c.regulation_id, c.control_id).second) {
            throw Error(ErrorCode::DuplicateControlId,
                        "control '" + c.control_id + "' appears twice in regulation '" +
                            c.regulation_id + "'",
                        line);
        }
        out.push_back(std::move(c));
    };

    if (format == DataFormat::Jsonl) {
        for_each_jsonl(in, [&](const ojson& obj, std::size_t line) {
            RegulationControl c;
            c.regulation_id = get_string(obj, "regulation_id", line, true);
            c.control_id = get_string(obj, "control_id", line, true);
            c.family = get_string(obj, "family", line, false);
            c.title = get_string(obj, "title", line, false);
            c.text = get_string(obj, "text", line, true);
            accept(std::move(c), line);
        });
        return out;
    }

    CsvTable table(in);
    for (std::size_t row = 0; row < table.rows(); ++row) {
        RegulationControl c;
        c.regulation_id = table.cell(row, "regulation_id", true);
        c.control_id = table.cell(row, "control_id", true);
        c.family = table.cell(row, "family", false);
        c.title = table.cell(row, "title", false);
        c.text = table.cell(row, "text", true);
        accept(std::move(c), table.line(row));
    }
    return out;
}

std::vector<RegulationControl> load_control_catalog(const std::filesystem::path& path,
                                                    DataFormat format)
{
    auto in = open_input(path);
    return parse_control_catalog(in, format);
}

void write_control_catalog(std::ostream& out, std::span<const RegulationControl> controls,
                           DataFormat format)
{
    if (format == DataFormat::Jsonl) {
        for (const auto& c : controls) {
            ojson obj;
            obj["regulation_id"] = c.regulation_id;
            obj["control_id"] = c.control_id;
            obj["family"] = c.family;
            obj["title"] = c.title;
            obj["text"] = c.text;
            out << obj.dump() << '\n';
        }
        return;
    }
    const std::vector<std::string> header{"regulation_id", "control_id", "family", "title", "text"};
    csv::write_row(out, header);
    for (const auto& c : controls) {
        const std::vector<std::string> row{c.regulation_id, c.control_id, c.family, c.title, c.text};
        csv::write_row(out, row);
    }
}

ControlCatalog::ControlCatalog(std::string regulation_id, std::vector<RegulationControl> controls)
    : regulation_id_(std::move(regulation_id))
{
    for (auto& c : controls) {
        if (c.regulation_id == regulation_id_) {
            controls_.push_back(std::move(c));
        }
    }
    std::sort(controls_.begin(), controls_.end(),
              [](const auto& a, const auto& b) { return a.control_id < b.control_id; });
    for (std::size_t i = 0; i < controls_.size(); ++i) {
        if (!by_id_.emplace(controls_[i].control_id, i).second) {
            throw Error(ErrorCode::DuplicateControlId, controls_[i].control_id);
        }
    }
}

bool ControlCatalog::contains(std::string_view control_id) const
{
    return by_id_.find(std::string(control_id)) != by_id_.end();
}

std::optional<std::size_t> ControlCatalog::index_of(std::string_view control_id) const
{
    auto it = by_id_.find(std::string(control_id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const RegulationControl* ControlCatalog::find(std::string_view control_id) const
{
    auto idx = index_of(control_id);
    return idx ? &controls_[*idx] : nullptr;
}

std::vector<std::string> ControlCatalog::label_order() const
{
    std::vector<std::string> out;
    out.reserve(controls_.size());
    for (const auto& c : controls_) {
        out.push_back(c.control_id);
    }
    return out;
}

// Techspec datasets --------------------------------------------------------------

TechspecLoadResult parse_techspec_dataset(std::istream& in, DataFormat format,
                                          const TechspecLoadOptions& options)
{
    TechspecLoadResult result;
    std::set<std::string> ids;

    auto accept = [&](TechspecCheck check, std::size_t line) {
        validate_check(check, line, options, result.warnings);
        if (!ids.insert(check.check_id).second) {
            throw Error(ErrorCode::ParseError, "duplicate check_id '" + check.check_id + "'", line);
        }
        result.checks.push_back(std::move(check));
    };

    if (format == DataFormat::Jsonl) {
        for_each_jsonl(in, [&](const ojson& obj, std::size_t line) {
            TechspecCheck c;
            c.check_id = get_string(obj, "check_id", line, true);
            c.title = get_string(obj, "title", line, false);
            c.description = get_string(obj, "description", line, false);
            c.rationale = get_string(obj, "rationale", line, false);
            c.fix = get_string(obj, "fix", line, false);
            c.source = get_string(obj, "source", line, false);
            if (auto it = obj.find("labels"); it != obj.end() && !it->is_null()) {
                if (!it->is_array()) {
                    throw Error(ErrorCode::ParseError, "field 'labels' must be an array", line);
                }
                for (const auto& l : *it) {
                    if (!l.is_string()) {
                        throw Error(ErrorCode::ParseError, "labels must be strings", line);
                    }
                    c.labels.push_back(l.get<std::string>());
                }
            }
            accept(std::move(c), line);
        });
        return result;
    }

    CsvTable table(in);
    for (std::size_t row = 0; row < table.rows(); ++row) {
        TechspecCheck c;
        c.check_id = table.cell(row, "check_id", true);
        c.title = table.cell(row, "title", false);
        c.description = table.cell(row, "description", false);
        c.rationale = table.cell(row, "rationale", false);
        c.fix = table.cell(row, "fix", false);
        c.source = table.cell(row, "source", false);
        c.labels = split_labels(table.cell(row, "labels", false));
        accept(std::move(c), table.line(row));
    }
    return result;
}

TechspecLoadResult load_techspec_dataset(const std::filesystem::path& path, DataFormat format,
                                         const TechspecLoadOptions& options)
{
    auto in = open_input(path);
    return parse_techspec_dataset(in, format, options);
}

void write_techspec_dataset(std::ostream& out, std::span<const TechspecCheck> checks,
                            DataFormat format)
{
    if (format == DataFormat::Jsonl) {
        for (const auto& c : checks) {
            ojson obj;
            obj["check_id"] = c.check_id;
            obj["title"] = c.title;
            obj["description"] = c.description;
            obj["rationale"] = c.rationale;
            obj["fix"] = c.fix;
            obj["source"] = c.source;
            obj["labels"] = c.labels;
            out << obj.dump() << '\n';
        }
        return;
    }
    const std::vector<std::string> header{"check_id",  "title", "description", "rationale",
                                          "fix",       "source", "labels"};
    csv::write_row(out, header);
    for (const auto& c : checks) {
        std::string labels;
        for (std::size_t i = 0; i < c.labels.size(); ++i) {
            labels += (i ? ";" : "") + c.labels[i];
        }
        const std::vector<std::string> row{c.check_id, c.title, c.description, c.rationale,
                                           c.fix,      c.source, labels};
        csv::write_row(out, row);
    }
}

}  // namespace ctlmap
