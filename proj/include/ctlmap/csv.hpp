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
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctlmap::csv {

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;  // line on which the record starts
};

/// RFC-4180 reader: comma separated, double-quote quoting with "" escapes,
/// CRLF or LF terminators, embedded newlines allowed inside quotes. Blank
/// lines are skipped. Throws Error{ParseError} on an unterminated quote or
/// stray characters after a closing quote.
std::vector<Record> parse(std::istream& in);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace ctlmap::csv
