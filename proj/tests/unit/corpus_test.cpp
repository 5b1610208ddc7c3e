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

#include <cctype>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ctlmap/corpus.hpp"
#include "ctlmap/csv.hpp"
#include "ctlmap/error.hpp"

namespace ctlmap {
namespace {

using Tokens = std::vector<std::string>;

const StopwordList& en() { return StopwordList::english(); }

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::NotFound;
}

TEST(Preprocess, PasswordExpirationExample)
{
    const auto ts = preprocess("Password expiration is set to 90 Days for existing passwords", en());
    EXPECT_EQ(ts.tokens,
              (Tokens{"password", "expiration", "set", "90", "days", "existing", "passwords"}));
}

TEST(Preprocess, EmptyAndAllStopwords)
{
    EXPECT_TRUE(preprocess("", en()).tokens.empty());
    EXPECT_TRUE(preprocess("THE the The", en()).tokens.empty());
}

TEST(Preprocess, SplitsOnPunctuationAndKeepsDigits)
{
    EXPECT_EQ(preprocess("IA-5(1): min_len=14", en()).tokens,
              (Tokens{"ia", "5", "1", "min", "len", "14"}));
}

TEST(Preprocess, RandomStringsProperty)
{
    std::mt19937_64 rng(11);
    const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 \t\n.,;:-_()[]!?'\"/";
    const std::vector<std::string> words{"the", "The", "is", "to", "for", "Disk", "AND", "of"};
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<std::size_t> len(0, 80);
    std::uniform_int_distribution<int> coin(0, 4);
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const std::size_t n = len(rng);
        for (std::size_t i = 0; i < n; ++i) {
            if (coin(rng) == 0) {
                text += " " + words[pick(rng) % words.size()] + " ";
            } else {
                text += alphabet[pick(rng)];
            }
        }
        const auto ts = preprocess(text, en());
        for (const auto& tok : ts.tokens) {
            ASSERT_FALSE(tok.empty());
            ASSERT_FALSE(en().contains(tok)) << tok;
            for (unsigned char c : tok) {
                ASSERT_TRUE(std::isdigit(c) || std::islower(c)) << text;
            }
        }
        // idempotent on its own joined output
        EXPECT_EQ(preprocess(ts.joined(), en()).tokens, ts.tokens) << text;
    }
}

TEST(Stopwords, BundledListIsLowercaseAndVersioned)
{
    EXPECT_FALSE(en().version().empty());
    EXPECT_GE(en().size(), 100u);
    EXPECT_TRUE(en().contains("is"));
    EXPECT_TRUE(en().contains("to"));
    EXPECT_TRUE(en().contains("for"));
}

TEST(SpecificationText, FieldOrderAndSkips)
{
    TechspecCheck c;
    c.title = "A";
    c.description = "B";
    c.rationale = "C";
    c.fix = "D";
    EXPECT_EQ(build_specification_text(c), "A B C D");
    c.description.clear();
    c.rationale.clear();
    EXPECT_EQ(build_specification_text(c), "A D");
    TechspecCheck disk;
    disk.title = "Check whether data disks are encrypted";
    EXPECT_EQ(build_specification_text(disk), "Check whether data disks are encrypted");
}

constexpr const char* kTwoControls =
    R"({"regulation_id":"NIST","control_id":"SC-28","family":"SC","title":"Protection of Information at Rest","text":"Protect information at rest."}
{"regulation_id":"NIST","control_id":"SC-13","family":"SC","title":"Cryptographic Protection","text":"Implement cryptography."}
)";

TEST(ControlCatalogLoad, JsonlTwoRows)
{
    std::istringstream in(kTwoControls);
    const auto controls = parse_control_catalog(in, DataFormat::Jsonl);
    ASSERT_EQ(controls.size(), 2u);
    EXPECT_EQ(controls[0].control_id, "SC-28");
    EXPECT_EQ(controls[1].title, "Cryptographic Protection");
}

TEST(ControlCatalogLoad, CsvDuplicateControl)
{
    std::istringstream in(
        "regulation_id,control_id,family,title,text\n"
        "NIST,SC-28,SC,At rest,\"Protect, at rest\"\n"
        "NIST,SC-28,SC,At rest again,Other text\n");
    EXPECT_EQ(code_of([&] { parse_control_catalog(in, DataFormat::Csv); }),
              ErrorCode::DuplicateControlId);
}

TEST(ControlCatalogLoad, MissingControlIdReportsLine)
{
    std::istringstream in(
        R"({"regulation_id":"NIST","control_id":"SC-28","family":"SC","title":"t","text":"x y"}
{"regulation_id":"NIST","family":"SC","title":"t","text":"x y"}
)");
    try {
        parse_control_catalog(in, DataFormat::Jsonl);
        FAIL() << "expected MissingField";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingField);
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(ControlCatalogLoad, JsonlRoundTripIsByteIdentical)
{
    std::istringstream in(kTwoControls);
    const auto first = parse_control_catalog(in, DataFormat::Jsonl);
    std::ostringstream a;
    write_control_catalog(a, first, DataFormat::Jsonl);
    std::istringstream again(a.str());
    const auto second = parse_control_catalog(again, DataFormat::Jsonl);
    std::ostringstream b;
    write_control_catalog(b, second, DataFormat::Jsonl);
    EXPECT_EQ(first, second);
    EXPECT_EQ(a.str(), b.str());
}

TEST(ControlCatalogLoad, CsvRoundTrip)
{
    std::istringstream in(kTwoControls);
    auto controls = parse_control_catalog(in, DataFormat::Jsonl);
    controls[0].text = "Quotes \"inside\", commas, and\nnewlines";
    std::ostringstream out;
    write_control_catalog(out, controls, DataFormat::Csv);
    std::istringstream back(out.str());
    EXPECT_EQ(parse_control_catalog(back, DataFormat::Csv), controls);
}

ControlCatalog two_control_catalog()
{
    std::istringstream in(kTwoControls);
    return ControlCatalog("NIST", parse_control_catalog(in, DataFormat::Jsonl));
}

TEST(TechspecLoad, JsonlLabels)
{
    const auto cat = two_control_catalog();
    std::istringstream in(
        R"({"check_id":"c1","title":"Check whether data disks are encrypted","labels":["SC-28","SC-13"]}
)");
    const auto r = parse_techspec_dataset(in, DataFormat::Jsonl, {&cat, true});
    ASSERT_EQ(r.checks.size(), 1u);
    EXPECT_EQ(r.checks[0].labels, (Tokens{"SC-13", "SC-28"}));
}

TEST(TechspecLoad, CsvSemicolonLabels)
{
    std::istringstream in(
        "check_id,title,description,rationale,fix,source,labels\n"
        "c1,Check whether data disks are encrypted,,,,stig,SC-28;SC-13\n");
    const auto r = parse_techspec_dataset(in, DataFormat::Csv);
    ASSERT_EQ(r.checks.size(), 1u);
    EXPECT_EQ(std::set<std::string>(r.checks[0].labels.begin(), r.checks[0].labels.end()),
              (std::set<std::string>{"SC-13", "SC-28"}));
}

TEST(TechspecLoad, StrictUnknownLabel)
{
    const auto cat = two_control_catalog();
    std::istringstream in(R"({"check_id":"c1","title":"t","labels":["ZZ-99"]}
)");
    EXPECT_EQ(code_of([&] { parse_techspec_dataset(in, DataFormat::Jsonl, {&cat, true}); }),
              ErrorCode::UnknownLabel);
}

TEST(TechspecLoad, LenientUnknownLabelWarns)
{
    const auto cat = two_control_catalog();
    std::istringstream in(R"({"check_id":"c1","title":"t","labels":["ZZ-99","SC-28"]}
)");
    const auto r = parse_techspec_dataset(in, DataFormat::Jsonl, {&cat, false});
    ASSERT_EQ(r.checks.size(), 1u);
    EXPECT_EQ(r.checks[0].labels, Tokens{"SC-28"});
    EXPECT_FALSE(r.warnings.empty());
}

TEST(TechspecLoad, TitleOrDescriptionRequired)
{
    std::istringstream in(R"({"check_id":"c1","rationale":"r","labels":[]}
)");
    EXPECT_EQ(code_of([&] { parse_techspec_dataset(in, DataFormat::Jsonl); }),
              ErrorCode::MissingField);
}

TEST(Csv, QuotedFieldsAndLineNumbers)
{
    std::istringstream in("a,b\n\"x,1\",\"multi\nline\"\nplain,\"q\"\"q\"\n");
    const auto rows = csv::parse(in);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1].fields, (Tokens{"x,1", "multi\nline"}));
    EXPECT_EQ(rows[2].fields, (Tokens{"plain", "q\"q"}));
    EXPECT_EQ(rows[2].line, 4u);
    EXPECT_EQ(csv::escape("a\"b"), "\"a\"\"b\"");
    EXPECT_EQ(csv::escape("plain"), "plain");
}

}  // namespace
}  // namespace ctlmap
