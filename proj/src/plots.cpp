/*
 * Copyright 2026 The dmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "dmpc/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace dmpc {

namespace {

constexpr double kW = 640, kH = 480, kPad = 50;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double sx(double x) const { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); }
  double sy(double y) const { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); }
};

std::string open_svg(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%g", kW) + "\" height=\"" +
         fmt("%g", kH) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" +
         fmt("%g", kW / 2) + "\" y=\"20\" text-anchor=\"middle\">" + title + "</text>\n";
}

std::string axes(const Frame& f, const std::string& xl, const std::string& yl) {
  std::string s = "<rect x=\"" + fmt("%g", kPad) + "\" y=\"" + fmt("%g", kPad) + "\" width=\"" +
                  fmt("%g", kW - 2 * kPad) + "\" height=\"" + fmt("%g", kH - 2 * kPad) +
                  "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + fmt("%g", kPad) + "\" y=\"" + fmt("%g", kH - kPad + 15) + "\">" +
       fmt("%.3g", f.x0) + "</text>\n";
  s += "<text x=\"" + fmt("%g", kW - kPad) + "\" y=\"" + fmt("%g", kH - kPad + 15) +
       "\" text-anchor=\"end\">" + fmt("%.3g", f.x1) + "</text>\n";
  s += "<text x=\"" + fmt("%g", kPad - 4) + "\" y=\"" + fmt("%g", kH - kPad) +
       "\" text-anchor=\"end\">" + fmt("%.3g", f.y0) + "</text>\n";
  s += "<text x=\"" + fmt("%g", kPad - 4) + "\" y=\"" + fmt("%g", kPad + 10) +
       "\" text-anchor=\"end\">" + fmt("%.3g", f.y1) + "</text>\n";
  s += "<text x=\"" + fmt("%g", kW / 2) + "\" y=\"" + fmt("%g", kH - 12) +
       "\" text-anchor=\"middle\">" + xl + "</text>\n";
  s += "<text x=\"14\" y=\"" + fmt("%g", kH / 2) + "\" transform=\"rotate(-90 14 " +
       fmt("%g", kH / 2) + ")\" text-anchor=\"middle\">" + yl + "</text>\n";
  return s;
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                     double width, double opacity = 1.0) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                  fmt("%g", width) + "\" stroke-opacity=\"" + fmt("%g", opacity) + "\" points=\"";
  for (const auto& [x, y] : pts) s += fmt("%.2f", x) + "," + fmt("%.2f", y) + " ";
  return s + "\"/>\n";
}

}  // namespace

std::string trajectory_svg(const Scenario& sc, const RunReport& rep) {
  const int M = sc.num_agents();
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto grow = [&](const Eigen::VectorXd& s) {
    x0 = std::min(x0, s(0));
    x1 = std::max(x1, s(0));
    y0 = std::min(y0, s(1));
    y1 = std::max(y1, s(1));
  };
  for (const auto& a : sc.agents) {
    grow(a.start);
    grow(a.goal);
  }
  for (const auto& log : rep.log) {
    for (const auto& s : log.states) grow(s);
  }
  const double m = std::max(x1 - x0, y1 - y0) * 0.05 + sc.delta;
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const double half = 0.5 * std::max(x1 - x0, y1 - y0) + m;
  // Equal scaling on both axes.
  Frame f{cx - half * kW / kH, cx + half * kW / kH, cy - half, cy + half};
  std::string s = open_svg(sc.name + ": agent paths");
  s += axes(f, "x [m]", "y [m]");
  for (int i = 0; i < M; ++i) {
    const std::string c = kColors[i % 8];
    std::vector<std::pair<double, double>> pts;
    pts.emplace_back(f.sx(sc.agents[i].start(0)), f.sy(sc.agents[i].start(1)));
    for (const auto& log : rep.log) pts.emplace_back(f.sx(log.states[i](0)), f.sy(log.states[i](1)));
    s += polyline(pts, c, 1.5);
    s += "<circle cx=\"" + fmt("%.2f", pts.front().first) + "\" cy=\"" +
         fmt("%.2f", pts.front().second) + "\" r=\"4\" fill=\"" + c + "\"/>\n";
    s += "<circle cx=\"" + fmt("%.2f", f.sx(sc.agents[i].goal(0))) + "\" cy=\"" +
         fmt("%.2f", f.sy(sc.agents[i].goal(1))) + "\" r=\"5\" fill=\"none\" stroke=\"" + c +
         "\"/>\n";
    const auto& last = pts.back();
    const double w = (f.sx(sc.delta) - f.sx(0.0));
    s += "<rect x=\"" + fmt("%.2f", last.first - w / 2) + "\" y=\"" +
         fmt("%.2f", last.second - w / 2) + "\" width=\"" + fmt("%.2f", w) + "\" height=\"" +
         fmt("%.2f", w) + "\" fill=\"" + c + "\" fill-opacity=\"0.3\"/>\n";
    s += "<text x=\"" + fmt("%g", kW - kPad + 5) + "\" y=\"" + fmt("%g", kPad + 15.0 * (i + 1)) +
         "\" fill=\"" + c + "\">agent " + std::to_string(i) + "</text>\n";
  }
  return s + "</svg>\n";
}

std::string residual_svg(const RunReport& rep) {
  int rounds = 1;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& log : rep.log) {
    rounds = std::max(rounds, static_cast<int>(log.residual_history.size()));
    for (double r : log.residual_history) {
      if (r > 0) {
        lo = std::min(lo, std::log10(r));
        hi = std::max(hi, std::log10(r));
      }
    }
  }
  if (!std::isfinite(lo)) lo = -1, hi = 0;
  if (hi - lo < 1) hi = lo + 1;
  Frame f{1.0, std::max(2.0, static_cast<double>(rounds)), std::floor(lo), std::ceil(hi)};
  std::string s = open_svg(rep.scenario + ": ADMM primal residual");
  s += axes(f, "round", "log10 residual");
  for (std::size_t k = rep.log.size(); k-- > 0;) {
    std::vector<std::pair<double, double>> pts;
    const auto& h = rep.log[k].residual_history;
    for (std::size_t r = 0; r < h.size(); ++r) {
      const double v = h[r] > 0 ? std::log10(h[r]) : f.y0;
      pts.emplace_back(f.sx(static_cast<double>(r + 1)), f.sy(std::max(v, f.y0)));
    }
    if (k == 0) {
      s += polyline(pts, "#d62728", 2.0);
    } else {
      s += polyline(pts, "#1f77b4", 1.0, 0.15);
    }
  }
  return s + "</svg>\n";
}

std::string sweep_svg(const std::vector<SweepEntry>& entries) {
  double top = 0;
  for (const auto& e : entries) top = std::max(top, e.report.cost);
  if (!(top > 0)) top = 1;
  Frame f{0.0, static_cast<double>(std::max<std::size_t>(entries.size(), 1)), 0.0, top * 1.1};
  std::string s = open_svg("closed-loop cost per delta");
  s += axes(f, "delta", "cost");
  const double bw = (f.sx(1.0) - f.sx(0.0)) * 0.6;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const double xc = f.sx(static_cast<double>(i) + 0.5);
    const double yt = f.sy(e.report.cost);
    s += "<rect x=\"" + fmt("%.2f", xc - bw / 2) + "\" y=\"" + fmt("%.2f", yt) + "\" width=\"" +
         fmt("%.2f", bw) + "\" height=\"" + fmt("%.2f", f.sy(0.0) - yt) + "\" fill=\"" +
         (e.report.success ? "#1f77b4" : "#bbbbbb") + "\"/>\n";
    s += "<text x=\"" + fmt("%.2f", xc) + "\" y=\"" + fmt("%.2f", f.sy(0.0) + 28) +
         "\" text-anchor=\"middle\">" + fmt("%g", e.delta) + "</text>\n";
    s += "<text x=\"" + fmt("%.2f", xc) + "\" y=\"" + fmt("%.2f", yt - 4) +
         "\" text-anchor=\"middle\">" + fmt("%.4g", e.report.cost) + "</text>\n";
  }
  return s + "</svg>\n";
}

}  // namespace dmpc
