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

#include "ctlmap/csv.hpp"

#include <istream>
#include <iterator>
#include <ostream>

#include "ctlmap/error.hpp"

namespace ctlmap::csv {

std::vector<Record> parse(std::istream& in)
{
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::vector<Record> out;

    std::size_t i = 0;
    std::size_t line = 1;
    const std::size_t n = data.size();

    // Skip a UTF-8 byte order mark.
    if (n >= 3 && data.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        i = 3;
    }

    while (i < n) {
        if (data[i] == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (data[i] == '\r' && i + 1 < n && data[i + 1] == '\n') {
            ++line;
            i += 2;
            continue;
        }

        Record rec;
        rec.line = line;
        std::string field;
        bool done = false;
        while (!done) {
            if (i < n && data[i] == '"') {
                const std::size_t quote_line = line;
                ++i;
                bool closed = false;
                while (i < n) {
                    const char c = data[i];
                    if (c == '"') {
                        if (i + 1 < n && data[i + 1] == '"') {
                            field.push_back('"');
                            i += 2;
                            continue;
                        }
                        ++i;
                        closed = true;
                        break;
                    }
                    if (c == '\n') {
                        ++line;
                    }
                    field.push_back(c);
                    ++i;
                }
                if (!closed) {
                    throw Error(ErrorCode::ParseError, "unterminated quoted field", quote_line);
                }
                if (i < n && data[i] != ',' && data[i] != '\n' && data[i] != '\r') {
                    throw Error(ErrorCode::ParseError, "unexpected character after closing quote",
                                line);
                }
            } else {
                while (i < n && data[i] != ',' && data[i] != '\n' && data[i] != '\r') {
                    if (data[i] == '"') {
                        throw Error(ErrorCode::ParseError, "quote inside unquoted field", line);
                    }
                    field.push_back(data[i]);
                    ++i;
                }
            }

            rec.fields.push_back(std::move(field));
            field.clear();

            if (i >= n) {
                done = true;
            } else if (data[i] == ',') {
                ++i;
            } else if (data[i] == '\n') {
                ++i;
                ++line;
                done = true;
            } else if (data[i] == '\r') {
                i += (i + 1 < n && data[i + 1] == '\n') ? 2 : 1;
                ++line;
                done = true;
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string escape(std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) {
            out << ',';
        }
        out << escape(fields[i]);
    }
    out << '\n';
}

}  // namespace ctlmap::csv
