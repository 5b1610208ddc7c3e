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

#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ctlmap/fixtures.hpp"
#include "support/oracles.hpp"

namespace ctlmap {
namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

TEST(Fixtures, RegenerationIsByteIdentical)
{
    testing::TempDir dir;
    fixtures::write(fixtures::generate(), dir.path());
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(CTLMAP_FIXTURES_DIR)) {
        const auto name = entry.path().filename();
        ASSERT_TRUE(std::filesystem::exists(dir.path() / name)) << name;
        EXPECT_EQ(slurp(entry.path()), slurp(dir.path() / name)) << name;
        ++files;
    }
    EXPECT_EQ(files, 6u);
}

TEST(Fixtures, ShapeAndTableRows)
{
    const auto set = fixtures::load(CTLMAP_FIXTURES_DIR);
    EXPECT_GE(set.nist.size(), 190u);
    EXPECT_EQ(set.stig_nist.size(), 2000u);
    EXPECT_EQ(set.operator_pool.size(), 360u);
    std::set<std::string> ids;
    for (const auto& c : set.nist) {
        ids.insert(c.control_id);
    }
    for (const char* id : {"IA-5(1)", "AC-6", "SC-28", "SC-13"}) {
        EXPECT_TRUE(ids.count(id)) << id;
    }
    bool disk = false;
    for (const auto& c : set.stig_nist) {
        if (c.title == "Check whether data disks are encrypted") {
            disk = true;
            EXPECT_EQ(c.labels, (std::vector<std::string>{"SC-13", "SC-28"}));
        }
        EXPECT_FALSE(c.labels.empty()) << c.check_id;
    }
    EXPECT_TRUE(disk);
}

TEST(Fixtures, SeedChangesOutput)
{
    fixtures::FixtureConfig cfg;
    cfg.stig_checks = 50;
    cfg.hipaa_checks = 20;
    cfg.operator_pool = 10;
    cfg.operator_eval = 10;
    const auto a = fixtures::generate(cfg);
    cfg.seed += 1;
    const auto b = fixtures::generate(cfg);
    EXPECT_NE(a.stig_nist, b.stig_nist);
}

}  // namespace
}  // namespace ctlmap
