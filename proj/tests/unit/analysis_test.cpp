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

#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ctlmap/analysis.hpp"
#include "ctlmap/plot.hpp"

namespace ctlmap {
namespace {

using Mappings = std::vector<std::pair<std::string, std::string>>;
using Ids = std::vector<std::string>;

ControlCatalog table_catalog()
{
    return ControlCatalog("NIST", {{"NIST", "AC-6", "AC", "Least Privilege", "x"},
                                   {"NIST", "SC-13", "SC", "Cryptographic Protection", "x"},
                                   {"NIST", "SC-28", "SC", "Protection of Information at Rest", "x"},
                                   {"NIST", "IA-5(1)", "IA", "Password-Based Authentication", "x"}});
}

TEST(Coverage, HalfCovered)
{
    const Mappings m{{"c1", "SC-13"}, {"c1", "SC-28"}, {"c2", "SC-28"}};
    const auto r = coverage_report(table_catalog(), m, "2026-01-01T00:00:00Z");
    EXPECT_EQ(r.covered, (Ids{"SC-13", "SC-28"}));
    EXPECT_EQ(r.gaps, (Ids{"AC-6", "IA-5(1)"}));
    EXPECT_DOUBLE_EQ(r.coverage_ratio, 0.5);
    EXPECT_EQ(r.per_family.at("SC"), (FamilyCoverage{2, 2}));
    EXPECT_EQ(r.per_family.at("AC"), (FamilyCoverage{0, 1}));
    std::ostringstream csv;
    r.write_family_csv(csv);
    EXPECT_EQ(csv.str(),
              "family,covered,total,ratio\n"
              "AC,0,1,0.000000\n"
              "IA,0,1,0.000000\n"
              "SC,2,2,1.000000\n");
    const nlohmann::json j = r;
    EXPECT_EQ(j.get<CoverageReport>(), r);
}

TEST(Coverage, NoneAndAll)
{
    const auto none = coverage_report(table_catalog(), Mappings{});
    EXPECT_EQ(none.coverage_ratio, 0.0);
    EXPECT_EQ(none.gaps.size(), 4u);
    const Mappings all{{"a", "AC-6"}, {"b", "SC-13"}, {"c", "SC-28"}, {"d", "IA-5(1)"}};
    const auto full = coverage_report(table_catalog(), all);
    EXPECT_EQ(full.coverage_ratio, 1.0);
    EXPECT_TRUE(full.gaps.empty());
}

TEST(Coverage, UnknownControlsIgnored)
{
    const Mappings m{{"a", "ZZ-1"}};
    EXPECT_EQ(coverage_report(table_catalog(), m).covered.size(), 0u);
}

TEST(Coverage, PartitionAndMonotonicityProperty)
{
    std::vector<RegulationControl> cs;
    for (int i = 0; i < 40; ++i) {
        cs.push_back({"R", "F" + std::to_string(i % 5) + "-" + std::to_string(i),
                      "F" + std::to_string(i % 5), "t", "x"});
    }
    const ControlCatalog cat("R", cs);
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        Mappings m;
        auto prev = coverage_report(cat, m);
        for (int step = 0; step < 30; ++step) {
            m.emplace_back("c" + std::to_string(step), cs[rng() % cs.size()].control_id);
            const auto r = coverage_report(cat, m);
            std::set<std::string> all(r.covered.begin(), r.covered.end());
            for (const auto& g : r.gaps) {
                EXPECT_TRUE(all.insert(g).second);  // disjoint
            }
            EXPECT_EQ(all.size(), cat.size());  // covering
            EXPECT_DOUBLE_EQ(r.coverage_ratio,
                             static_cast<double>(r.covered.size()) / cat.size());
            EXPECT_TRUE(std::includes(r.covered.begin(), r.covered.end(), prev.covered.begin(),
                                      prev.covered.end()));
            EXPECT_LE(r.gaps.size(), prev.gaps.size());
            prev = r;
        }
    }
}

TEST(Plot, RendersSvg)
{
    plot::Chart c;
    c.title = "t <&>";
    c.series.push_back({"precision", "#123456", false, {{0.1, 0.5}, {0.9, 0.7}}});
    c.series.push_back({"recall", "#654321", true, {{0.1, 0.9}, {0.9, 0.2}}});
    const auto svg = plot::render_svg(c);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("&lt;&amp;&gt;"), std::string::npos);
    EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
}

}  // namespace
}  // namespace ctlmap
