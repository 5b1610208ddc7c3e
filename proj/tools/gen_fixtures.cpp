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

// Regenerates the bundled fixture corpus.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "ctlmap/fixtures.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Generate the synthetic fixture corpus"};
    std::string out = "data/fixtures";
    ctlmap::fixtures::FixtureConfig cfg;
    app.add_option("--out", out, "Output directory");
    app.add_option("--seed", cfg.seed, "Generator seed");
    CLI11_PARSE(app, argc, argv);
    try {
        const auto set = ctlmap::fixtures::generate(cfg);
        ctlmap::fixtures::write(set, out);
        std::cerr << "wrote " << set.nist.size() << " NIST controls, " << set.stig_nist.size()
                  << " checks, " << set.operator_pool.size() << " pool rules to " << out << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
