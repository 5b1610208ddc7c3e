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

#include "ctlmap/fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>

#include "ctlmap/error.hpp"

namespace ctlmap::fixtures {

namespace {

// Portable across standard libraries, unlike std::uniform_int_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    bool chance(double p) { return static_cast<double>(engine_() >> 11) * 0x1.0p-53 < p; }
    template <typename T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

struct Family {
    const char* id;
    const char* name;
    std::vector<std::string> words;
};

const std::vector<Family>& nist_families()
{
    static const std::vector<Family> f{
        {"AC", "ACCESS CONTROL", {"access", "account", "permission", "session", "authorization"}},
        {"AT", "AWARENESS AND TRAINING", {"training", "awareness", "personnel", "literacy", "course"}},
        {"AU", "AUDIT AND ACCOUNTABILITY", {"audit", "log", "record", "event", "timestamp"}},
        {"CA", "SECURITY ASSESSMENT AND AUTHORIZATION",
         {"assessment", "accreditation", "monitoring", "plan", "interconnection"}},
        {"CM", "CONFIGURATION MANAGEMENT", {"baseline", "change", "inventory", "setting", "component"}},
        {"CP", "CONTINGENCY PLANNING", {"backup", "recovery", "contingency", "alternate", "restore"}},
        {"IA", "IDENTIFICATION AND AUTHENTICATION",
         {"authentication", "identifier", "credential", "authenticator", "login"}},
        {"IR", "INCIDENT RESPONSE", {"incident", "response", "handling", "reporting", "escalation"}},
        {"MA", "MAINTENANCE", {"maintenance", "repair", "tools", "diagnostic", "remote"}},
        {"MP", "MEDIA PROTECTION", {"media", "storage", "sanitization", "transport", "marking"}},
        {"PE", "PHYSICAL AND ENVIRONMENTAL PROTECTION",
         {"physical", "facility", "visitor", "power", "entry"}},
        {"PL", "PLANNING", {"planning", "rules", "behavior", "architecture", "privacy"}},
        {"PS", "PERSONNEL SECURITY", {"screening", "termination", "transfer", "agreement", "sanctions"}},
        {"RA", "RISK ASSESSMENT", {"risk", "vulnerability", "scanning", "categorization", "threat"}},
        {"SA", "SYSTEM AND SERVICES ACQUISITION",
         {"acquisition", "developer", "supply", "lifecycle", "outsourced"}},
        {"SC", "SYSTEM AND COMMUNICATIONS PROTECTION",
         {"communications", "boundary", "network", "transmission", "protection"}},
        {"SI", "SYSTEM AND INFORMATION INTEGRITY", {"integrity", "malicious", "flaw", "alert", "patch"}},
        {"PM", "PROGRAM MANAGEMENT", {"program", "governance", "strategy", "resources", "enterprise"}},
    };
    return f;
}

const std::vector<std::string> kGeneric{"system", "host", "server", "service", "value", "policy",
                                        "file", "daemon", "application", "platform", "default",
                                        "parameter", "operating", "instance", "component"};
const std::vector<std::string> kStates{"enabled", "configured", "restricted", "enforced",
                                       "required", "disabled", "set"};
const std::vector<std::string> kOperatorWords{"kubernetes", "cluster", "pod",       "openshift",
                                              "node",       "namespace", "operator", "container"};

// Generated control vocabulary: pseudo-words built from consonant-vowel pairs.
class WordForge {
public:
    explicit WordForge(Rng& rng) : rng_(rng) {}

    std::string next()
    {
        static const std::string cons = "bdfgklmnprstvz";
        static const std::string vow = "aeiou";
        for (;;) {
            std::string w;
            const std::size_t syll = 2 + rng_.below(2);
            for (std::size_t i = 0; i < syll; ++i) {
                w += cons[rng_.below(cons.size())];
                w += vow[rng_.below(vow.size())];
            }
            if (rng_.chance(0.5)) {
                w += cons[rng_.below(cons.size())];
            }
            if (used_.insert(w).second && !StopwordList::english().contains(w)) {
                return w;
            }
        }
    }

private:
    Rng& rng_;
    std::set<std::string> used_;
};

struct ControlSpec {
    RegulationControl control;
    std::vector<std::string> keys;     // shared by catalog text and STIG checks
    std::vector<std::string> aliases;  // operator-rule vocabulary only
    std::vector<std::string> family_words;
    std::size_t partner = 0;           // index of the usual co-label
};

std::string upper(std::string s)
{
    for (auto& c : s) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return s;
}

struct SpecialControl {
    const char* id;
    const char* title;
    const char* text;
    std::vector<std::string> keys;
};

const std::vector<SpecialControl>& nist_specials()
{
    static const std::vector<SpecialControl> s{
        {"IA-5(1)", "AUTHENTICATOR MANAGEMENT | PASSWORD-BASED AUTHENTICATION",
         "Enforces at least the following number of changed characters when new passwords are "
         "created: [Assignment: organization-defined number]",
         {"password", "uppercase", "complexity", "characters"}},
        {"AC-6", "LEAST PRIVILEGE",
         "The organization employs the principle of least privilege, allowing only authorized "
         "accesses for users (or processes acting on behalf of users) which are necessary to "
         "accomplish assigned tasks in accordance with organizational missions and business "
         "functions.",
         {"privilege", "administrators", "least", "users"}},
        {"SC-28", "PROTECTION OF INFORMATION AT REST",
         "The information system protects the [Selection (one or more): confidentiality; "
         "integrity] of [Assignment: organization-defined information at rest].",
         {"disks", "encrypted", "rest", "volumes"}},
        {"SC-13", "CRYPTOGRAPHIC PROTECTION",
         "The information system implements [Assignment: organization-defined cryptographic uses "
         "and type of cryptography required for each use] in accordance with applicable federal "
         "laws, Executive Orders, directives, policies, regulations, and standards.",
         {"cryptographic", "encryption", "cipher", "fips"}},
    };
    return s;
}

std::vector<ControlSpec> make_nist(const FixtureConfig& cfg, Rng& rng, WordForge& forge)
{
    std::map<std::string, const SpecialControl*> specials;
    for (const auto& s : nist_specials()) {
        specials[s.id] = &s;
    }
    std::vector<ControlSpec> out;
    for (const auto& fam : nist_families()) {
        std::vector<std::string> ids;
        for (std::size_t n = 1; n <= cfg.controls_per_family; ++n) {
            ids.push_back(std::string(fam.id) + "-" + std::to_string(n));
        }
        for (const auto& s : nist_specials()) {
            const std::string id = s.id;
            if (id.rfind(std::string(fam.id) + "-", 0) == 0 &&
                std::find(ids.begin(), ids.end(), id) == ids.end()) {
                ids.push_back(id);
            }
        }
        const std::size_t first = out.size();
        for (const auto& id : ids) {
            ControlSpec spec;
            spec.family_words = fam.words;
            spec.control.control_id = id;
            spec.control.family = fam.id;
            spec.control.regulation_id = kNistRegulation;
            for (int i = 0; i < 3; ++i) {
                spec.aliases.push_back(forge.next());
            }
            if (auto it = specials.find(id); it != specials.end()) {
                spec.keys = it->second->keys;
                spec.control.title = it->second->title;
                spec.control.text = it->second->text;
            } else {
                for (int i = 0; i < 4; ++i) {
                    spec.keys.push_back(forge.next());
                }
                spec.control.title = std::string(fam.name) + " | " + upper(spec.keys[0]) + " " +
                                     upper(spec.keys[1]);
                spec.control.text = "The organization " +
                                    std::string(rng.chance(0.5) ? "defines" : "employs") + " " +
                                    spec.keys[0] + " " + spec.keys[1] + " for " + spec.keys[2] +
                                    " " + spec.keys[3] + " and reviews " + rng.pick(fam.words) +
                                    " " + rng.pick(fam.words) + " requirements.";
            }
            out.push_back(std::move(spec));
        }
        for (std::size_t i = first; i < out.size(); ++i) {
            out[i].partner = first + (i - first + 1) % (out.size() - first);
        }
    }
    auto index_of = [&](const std::string& id) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i].control.control_id == id) {
                return i;
            }
        }
        throw Error(ErrorCode::NotFound, id);
    };
    out[index_of("SC-28")].partner = index_of("SC-13");
    out[index_of("SC-13")].partner = index_of("SC-28");
    return out;
}

std::vector<ControlSpec> make_hipaa()
{
    struct Row {
        const char* id;
        const char* family;
        const char* title;
        const char* text;
        std::vector<std::string> keys;
    };
    static const std::vector<Row> rows{
        {"164.308(a)(1)(ii)(A)", "Administrative", "Risk analysis",
         "Conduct an accurate and thorough assessment of the potential risks and vulnerabilities "
         "to the confidentiality, integrity, and availability of electronic protected health "
         "information.",
         {"risk", "vulnerabilities", "assessment", "scan"}},
        {"164.308(a)(1)(ii)(D)", "Administrative", "Information system activity review",
         "Implement procedures to regularly review records of information system activity, such "
         "as audit logs, access reports, and security incident tracking reports.",
         {"audit", "logs", "review", "activity"}},
        {"164.308(a)(3)(ii)(C)", "Administrative", "Termination procedures",
         "Implement procedures for terminating access to electronic protected health information "
         "when the employment of a workforce member ends.",
         {"termination", "workforce", "deprovision", "accounts"}},
        {"164.308(a)(5)(ii)(C)", "Administrative", "Log-in monitoring",
         "Procedures for monitoring log-in attempts and reporting discrepancies.",
         {"login", "attempts", "failed", "lockout"}},
        {"164.308(a)(5)(ii)(D)", "Administrative", "Password management",
         "Procedures for creating, changing, and safeguarding passwords.",
         {"password", "uppercase", "complexity", "characters"}},
        {"164.308(a)(6)(ii)", "Administrative", "Response and reporting",
         "Identify and respond to suspected or known security incidents; mitigate harmful "
         "effects; and document security incidents and their outcomes.",
         {"incident", "response", "alerting", "mitigate"}},
        {"164.308(a)(7)(ii)(A)", "Administrative", "Data backup plan",
         "Establish and implement procedures to create and maintain retrievable exact copies of "
         "electronic protected health information.",
         {"backup", "snapshot", "copies", "retention"}},
        {"164.310(a)(1)", "Physical", "Facility access controls",
         "Implement policies and procedures to limit physical access to electronic information "
         "systems and the facility or facilities in which they are housed.",
         {"facility", "physical", "badge", "datacenter"}},
        {"164.310(d)(2)(i)", "Physical", "Disposal",
         "Implement policies and procedures to address the final disposition of electronic "
         "protected health information and the hardware or electronic media on which it is "
         "stored.",
         {"disposal", "wipe", "sanitize", "hardware"}},
        {"164.312(a)(1)", "Technical", "Access control",
         "Implement technical policies and procedures for electronic information systems that "
         "maintain electronic protected health information to allow access only to those persons "
         "or software programs that have been granted access rights.",
         {"privilege", "administrators", "roles", "users"}},
        {"164.312(a)(2)(i)", "Technical", "Unique user identification",
         "Assign a unique name and/or number for identifying and tracking user identity.",
         {"unique", "identifier", "shared", "uid"}},
        {"164.312(a)(2)(iii)", "Technical", "Automatic logoff",
         "Implement electronic procedures that terminate an electronic session after a "
         "predetermined time of inactivity.",
         {"session", "timeout", "inactivity", "logoff"}},
        {"164.312(a)(2)(iv)", "Technical", "Encryption and decryption",
         "Implement a mechanism to encrypt and decrypt electronic protected health information.",
         {"disks", "encrypted", "encryption", "volumes"}},
        {"164.312(b)", "Technical", "Audit controls",
         "Implement hardware, software, and/or procedural mechanisms that record and examine "
         "activity in information systems that contain or use electronic protected health "
         "information.",
         {"auditd", "syslog", "events", "forwarding"}},
        {"164.312(c)(1)", "Technical", "Integrity",
         "Implement policies and procedures to protect electronic protected health information "
         "from improper alteration or destruction.",
         {"integrity", "checksum", "tampering", "aide"}},
        {"164.312(e)(1)", "Technical", "Transmission security",
         "Implement technical security measures to guard against unauthorized access to "
         "electronic protected health information that is being transmitted over an electronic "
         "communications network.",
         {"tls", "transmission", "ssh", "ciphers"}},
    };
    std::vector<ControlSpec> out;
    for (const auto& r : rows) {
        ControlSpec spec;
        spec.control = RegulationControl{kHipaaRegulation, r.id, r.family, r.title, r.text};
        spec.keys = r.keys;
        spec.family_words = {"health", "electronic", "protected", "safeguard"};
        out.push_back(std::move(spec));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].partner = (i + 1) % out.size();
    }
    return out;
}

std::string sentence(std::vector<std::string> words)
{
    std::string s;
    for (const auto& w : words) {
        if (w.empty()) {
            continue;
        }
        if (!s.empty()) {
            s += ' ';
        }
        s += w;
    }
    if (!s.empty()) {
        s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        s += '.';
    }
    return s;
}

std::vector<std::string> sorted_labels(std::vector<std::string> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

TechspecCheck stig_check(const std::vector<ControlSpec>& specs, std::size_t primary, Rng& rng,
                         std::string id)
{
    const auto& a = specs[primary];
    const ControlSpec* b = nullptr;
    if (rng.chance(0.25)) {
        b = rng.chance(0.7) ? &specs[a.partner] : &specs[rng.below(specs.size())];
        if (b == &a) {
            b = nullptr;
        }
    }
    const auto& second = b != nullptr ? *b : a;
    auto noise = [&]() -> std::string {
        return rng.chance(0.3) ? rng.pick(specs[rng.below(specs.size())].keys) : std::string{};
    };

    TechspecCheck c;
    c.check_id = std::move(id);
    c.source = "STIG";
    switch (rng.below(4)) {
    case 0:
        c.title = "Check whether " + rng.pick(a.keys) + " " + rng.pick(a.keys) + " is " +
                  rng.pick(kStates);
        break;
    case 1:
        c.title = "Ensure " + rng.pick(a.keys) + " " + rng.pick(kGeneric) + " are " +
                  rng.pick(kStates);
        break;
    case 2:
        c.title = "Verify the " + rng.pick(a.keys) + " " + rng.pick(a.family_words) + " setting";
        break;
    default:
        c.title = "The " + rng.pick(kGeneric) + " must configure " + rng.pick(a.keys) + " " +
                  rng.pick(a.keys);
        break;
    }
    c.description = sentence({"the", rng.pick(second.family_words), rng.pick(second.keys),
                              rng.pick(kGeneric), "must be", rng.pick(kStates), "to protect",
                              rng.pick(second.keys), noise()});
    if (rng.chance(0.7)) {
        c.rationale = sentence({"without", rng.pick(a.keys), rng.pick(a.family_words),
                                "the", rng.pick(kGeneric), "may expose", rng.pick(kGeneric),
                                noise()});
    }
    if (rng.chance(0.8)) {
        c.fix = sentence({"configure", rng.pick(second.keys), rng.pick(a.keys), "in the",
                          rng.pick(kGeneric), rng.pick(kGeneric), "file"});
    }
    c.labels = {a.control.control_id};
    if (b != nullptr) {
        c.labels.push_back(b->control.control_id);
    }
    c.labels = sorted_labels(std::move(c.labels));
    return c;
}

TechspecCheck operator_check(const std::vector<ControlSpec>& specs,
                             const std::vector<std::size_t>& subset, std::size_t primary, Rng& rng,
                             std::string id)
{
    const auto& a = specs[primary];
    const ControlSpec* b = nullptr;
    if (rng.chance(0.15)) {
        b = &specs[subset[rng.below(subset.size())]];
        if (b == &a) {
            b = nullptr;
        }
    }
    TechspecCheck c;
    c.check_id = std::move(id);
    c.source = "ComplianceOperator";
    c.title = sentence({rng.chance(0.5) ? "ensure" : "verify", rng.pick(a.aliases),
                        rng.pick(a.aliases), "on", rng.pick(kOperatorWords),
                        rng.pick(kOperatorWords)});
    c.title.pop_back();
    c.description = sentence({"the", rng.pick(kOperatorWords), rng.pick(a.aliases),
                              b != nullptr ? rng.pick(b->aliases) : std::string{},
                              rng.chance(0.35) ? rng.pick(a.keys) : std::string{}, "must be",
                              rng.pick(kStates)});
    c.labels = {a.control.control_id};
    if (b != nullptr) {
        c.labels.push_back(b->control.control_id);
    }
    c.labels = sorted_labels(std::move(c.labels));
    return c;
}

std::string padded(std::size_t n)
{
    std::string s = std::to_string(n);
    return std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

template <typename T>
void write_file(const std::filesystem::path& path, const std::vector<T>& rows)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    if constexpr (std::is_same_v<T, RegulationControl>) {
        write_control_catalog(out, rows, DataFormat::Jsonl);
    } else {
        write_techspec_dataset(out, rows, DataFormat::Jsonl);
    }
    if (!out) {
        throw Error(ErrorCode::IoError, "write to " + path.string() + " failed");
    }
}

}  // namespace

FixtureSet generate(const FixtureConfig& cfg)
{
    Rng rng(cfg.seed);
    WordForge forge(rng);
    const auto nist = make_nist(cfg, rng, forge);
    const auto hipaa = make_hipaa();

    FixtureSet set;
    for (const auto& s : nist) {
        set.nist.push_back(s.control);
    }
    for (const auto& s : hipaa) {
        set.hipaa.push_back(s.control);
    }

    set.stig_nist.push_back(TechspecCheck{"stig-t1-1",
                                          "Check whether password policy requires at least one "
                                          "uppercase letter",
                                          "", "", "", "STIG", {"IA-5(1)"}});
    set.stig_nist.push_back(TechspecCheck{"stig-t1-2",
                                          "Ensure no more than 3 user administrators are defined "
                                          "for Kubernetes containers",
                                          "", "", "", "STIG", {"AC-6"}});
    set.stig_nist.push_back(TechspecCheck{
        "stig-t1-3", "Check whether data disks are encrypted", "", "", "", "STIG",
        {"SC-13", "SC-28"}});
    std::vector<std::size_t> order(nist.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    for (std::size_t n = set.stig_nist.size(); n < cfg.stig_checks; ++n) {
        if (n % order.size() == 0) {
            rng.shuffle(order);
        }
        set.stig_nist.push_back(stig_check(nist, order[n % order.size()], rng, "stig-" + padded(n)));
    }

    set.stig_hipaa.push_back(TechspecCheck{"hstig-t1-3", "Check whether data disks are encrypted",
                                           "", "", "", "STIG", {"164.312(a)(2)(iv)"}});
    for (std::size_t n = 1; n < cfg.hipaa_checks; ++n) {
        set.stig_hipaa.push_back(stig_check(hipaa, n % hipaa.size(), rng, "hstig-" + padded(n)));
    }

    // Operator rules cover a subset of controls, always including the four
    // hand-written ones, and speak mostly in their own vocabulary.
    std::vector<std::size_t> subset;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < nist.size(); ++i) {
        bool special = false;
        for (const auto& s : nist_specials()) {
            special = special || nist[i].control.control_id == s.id;
        }
        (special ? subset : rest).push_back(i);
    }
    rng.shuffle(rest);
    while (subset.size() < cfg.operator_controls && !rest.empty()) {
        subset.push_back(rest.back());
        rest.pop_back();
    }
    std::sort(subset.begin(), subset.end());
    for (std::size_t n = 0; n < cfg.operator_pool; ++n) {
        set.operator_pool.push_back(
            operator_check(nist, subset, subset[n % subset.size()], rng, "ocp-" + padded(n)));
    }
    for (std::size_t n = 0; n < cfg.operator_eval; ++n) {
        set.operator_eval.push_back(operator_check(nist, subset, subset[n % subset.size()], rng,
                                                   "ocp-eval-" + padded(n)));
    }
    rng.shuffle(set.operator_pool);
    return set;
}

void write(const FixtureSet& set, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_file(dir / "nist_catalog.jsonl", set.nist);
    write_file(dir / "hipaa_catalog.jsonl", set.hipaa);
    write_file(dir / "stig_nist.jsonl", set.stig_nist);
    write_file(dir / "stig_hipaa.jsonl", set.stig_hipaa);
    write_file(dir / "operator_pool.jsonl", set.operator_pool);
    write_file(dir / "operator_eval.jsonl", set.operator_eval);
}

FixtureSet load(const std::filesystem::path& dir)
{
    FixtureSet set;
    set.nist = load_control_catalog(dir / "nist_catalog.jsonl", DataFormat::Jsonl);
    set.hipaa = load_control_catalog(dir / "hipaa_catalog.jsonl", DataFormat::Jsonl);
    const ControlCatalog nist(kNistRegulation, set.nist);
    const ControlCatalog hipaa(kHipaaRegulation, set.hipaa);
    TechspecLoadOptions strict_nist{&nist, true};
    TechspecLoadOptions strict_hipaa{&hipaa, true};
    set.stig_nist = load_techspec_dataset(dir / "stig_nist.jsonl", DataFormat::Jsonl, strict_nist).checks;
    set.stig_hipaa =
        load_techspec_dataset(dir / "stig_hipaa.jsonl", DataFormat::Jsonl, strict_hipaa).checks;
    set.operator_pool =
        load_techspec_dataset(dir / "operator_pool.jsonl", DataFormat::Jsonl, strict_nist).checks;
    set.operator_eval =
        load_techspec_dataset(dir / "operator_eval.jsonl", DataFormat::Jsonl, strict_nist).checks;
    return set;
}

}  // namespace ctlmap::fixtures
