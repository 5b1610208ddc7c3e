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

#include <string>
#include <utility>
#include <vector>

#include "ctlmap/evaluation.hpp"

namespace ctlmap::plot {

struct Series {
    std::string name;
    std::string color;
    bool dashed = false;
    std::vector<std::pair<double, double>> points;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;
    std::vector<Series> series;
};

/// Standalone SVG document for a line chart.
std::string render_svg(const Chart& chart);

/// Precision (solid) and recall (dashed) against threshold, one colour per backend.
std::string threshold_svg(const SweepReport& report);

/// F1 against feedback iteration.
std::string feedback_svg(const FeedbackExperimentResult& result);

}  // namespace ctlmap::plot
