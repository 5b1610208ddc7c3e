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
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctlmap/corpus.hpp"

namespace ctlmap {

struct FamilyCoverage {
    std::size_t covered = 0;
    std::size_t total = 0;

    bool operator==(const FamilyCoverage&) const = default;
};

struct CoverageReport {
    std::string regulation_id;
    std::vector<std::string> covered;  // sorted
    std::vector<std::string> gaps;     // sorted
    double coverage_ratio = 0.0;
    std::map<std::string, FamilyCoverage> per_family;
    std::string generated_at;

    bool operator==(const CoverageReport&) const = default;

    /// `family,covered,total,ratio`
    void write_family_csv(std::ostream& out) const;
};

void to_json(nlohmann::json& j, const CoverageReport& r);
void from_json(const nlohmann::json& j, CoverageReport& r);

/// A control is covered when at least one accepted (check_id, control_id)
/// mapping names it. Mappings to ids outside the catalog are ignored.
CoverageReport coverage_report(const ControlCatalog& catalog,
                               std::span<const std::pair<std::string, std::string>> accepted,
                               std::string generated_at = {});

/// Current UTC time as `YYYY-MM-DDTHH:MM:SSZ`.
std::string utc_timestamp();

}  // namespace ctlmap
