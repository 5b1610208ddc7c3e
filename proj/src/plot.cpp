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

#include "ctlmap/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ctlmap::plot {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 64;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 56;

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const Chart& c)
{
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    const double xs = c.x_max > c.x_min ? c.x_max - c.x_min : 1.0;
    const double ys = c.y_max > c.y_min ? c.y_max - c.y_min : 1.0;
    auto px = [&](double x) { return kLeft + (x - c.x_min) / xs * pw; };
    auto py = [&](double y) { return kTop + ph - (y - c.y_min) / ys * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(c.title) << "</text>\n";

    for (int i = 0; i <= 5; ++i) {
        const double fy = c.y_min + ys * i / 5.0;
        const double fx = c.x_min + xs * i / 5.0;
        o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(fy)) << "\" x2=\""
          << num(kLeft + pw) << "\" y2=\"" << num(py(fy)) << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(fy) + 4)
          << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
        o << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(kTop + ph + 18)
          << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
    }
    o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 14)
      << "\" text-anchor=\"middle\">" << xml_escape(c.x_label) << "</text>\n";
    o << "<text transform=\"translate(16," << num(kTop + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(c.y_label) << "</text>\n";

    double legend_y = kTop + 10;
    for (const auto& s : c.series) {
        if (!s.points.empty()) {
            o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
            if (s.dashed) {
                o << " stroke-dasharray=\"6 4\"";
            }
            o << " points=\"";
            for (std::size_t i = 0; i < s.points.size(); ++i) {
                o << (i ? " " : "") << num(px(s.points[i].first)) << ','
                  << num(py(s.points[i].second));
            }
            o << "\"/>\n";
            for (const auto& [x, y] : s.points) {
                o << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
                  << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
            }
        }
        const double lx = kLeft + pw + 12;
        o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(lx + 24)
          << "\" y2=\"" << num(legend_y) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (s.dashed) {
            o << " stroke-dasharray=\"6 4\"";
        }
        o << "/>\n<text x=\"" << num(lx + 30) << "\" y=\"" << num(legend_y + 4) << "\">"
          << xml_escape(s.name) << "</text>\n";
        legend_y += 18;
    }
    o << "</svg>\n";
    return o.str();
}

std::string threshold_svg(const SweepReport& report)
{
    Chart c;
    c.title = "Precision and recall by confidence threshold";
    c.x_label = "threshold";
    c.y_label = "score";
    const std::pair<Backend, const char*> palette[] = {
        {Backend::Search, "#1f77b4"}, {Backend::Cnn, "#ff7f0e"}, {Backend::Hybrid, "#2ca02c"}};
    for (const auto& [backend, color] : palette) {
        const auto pts = report.points(backend);
        if (pts.empty()) {
            continue;
        }
        Series p{std::string(to_string(backend)) + " precision", color, false, {}};
        Series r{std::string(to_string(backend)) + " recall", color, true, {}};
        for (const auto& m : pts) {
            p.points.emplace_back(m.threshold, m.precision);
            r.points.emplace_back(m.threshold, m.recall);
        }
        c.series.push_back(std::move(p));
        c.series.push_back(std::move(r));
    }
    return render_svg(c);
}

std::string feedback_svg(const FeedbackExperimentResult& result)
{
    Chart c;
    c.title = "F1 with expert feedback";
    c.x_label = "iteration";
    c.y_label = "f1";
    c.x_max = result.points.empty() ? 1.0 : static_cast<double>(result.points.back().iteration);
    double lo = 1.0;
    Series s{"f1", "#d62728", false, {}};
    for (const auto& p : result.points) {
        s.points.emplace_back(static_cast<double>(p.iteration), p.metrics.f1);
        lo = std::min(lo, p.metrics.f1);
    }
    c.y_min = std::max(0.0, std::floor(lo * 10.0 - 1.0) / 10.0);
    c.series.push_back(std::move(s));
    return render_svg(c);
}

}  // namespace ctlmap::plot
