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

#include "ctlmap/analysis.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "ctlmap/csv.hpp"

namespace ctlmap {

CoverageReport coverage_report(const ControlCatalog& catalog,
                               std::span<const std::pair<std::string, std::string>> accepted,
                               std::string generated_at)
{
    std::set<std::string> hit;
    for (const auto& [check, control] : accepted) {
        if (catalog.contains(control)) {
            hit.insert(control);
        }
    }
    CoverageReport r;
    r.regulation_id = catalog.regulation_id();
    r.generated_at = std::move(generated_at);
    for (const auto& c : catalog.controls()) {
        auto& fam = r.per_family[c.family];
        ++fam.total;
        if (hit.count(c.control_id) != 0) {
            ++fam.covered;
            r.covered.push_back(c.control_id);
        } else {
            r.gaps.push_back(c.control_id);
        }
    }
    const auto total = catalog.size();
    r.coverage_ratio =
        total == 0 ? 0.0 : static_cast<double>(r.covered.size()) / static_cast<double>(total);
    return r;
}

void CoverageReport::write_family_csv(std::ostream& out) const
{
    out << "family,covered,total,ratio\n";
    for (const auto& [family, fc] : per_family) {
        char ratio[32];
        std::snprintf(ratio, sizeof ratio, "%.6f",
                      fc.total == 0 ? 0.0
                                    : static_cast<double>(fc.covered) /
                                          static_cast<double>(fc.total));
        out << csv::escape(family) << ',' << fc.covered << ',' << fc.total << ',' << ratio
            << '\n';
    }
}

void to_json(nlohmann::json& j, const CoverageReport& r)
{
    auto fam = nlohmann::json::object();
    for (const auto& [family, fc] : r.per_family) {
        fam[family] = {{"covered", fc.covered}, {"total", fc.total}};
    }
    j = nlohmann::json{{"regulation_id", r.regulation_id},
                       {"covered", r.covered},
                       {"gaps", r.gaps},
                       {"coverage_ratio", r.coverage_ratio},
                       {"per_family", std::move(fam)},
                       {"generated_at", r.generated_at}};
}

void from_json(const nlohmann::json& j, CoverageReport& r)
{
    j.at("regulation_id").get_to(r.regulation_id);
    j.at("covered").get_to(r.covered);
    j.at("gaps").get_to(r.gaps);
    j.at("coverage_ratio").get_to(r.coverage_ratio);
    r.per_family.clear();
    for (const auto& [family, fc] : j.at("per_family").items()) {
        r.per_family[family] =
            FamilyCoverage{fc.at("covered").get<std::size_t>(), fc.at("total").get<std::size_t>()};
    }
    r.generated_at = j.value("generated_at", std::string{});
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace ctlmap
