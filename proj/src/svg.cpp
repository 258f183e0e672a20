#include "alstop/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace alstop {

namespace {

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
                                "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31"};
constexpr std::size_t kPaletteSize = sizeof kPalette / sizeof kPalette[0];

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string open_svg(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string render_region_map(const RegionGrid& grid, const std::string& title) {
  const int left = 70, top = 30, plot = 400, legend = 220;
  const int w = left + plot + legend, h = top + plot + 50;
  std::ostringstream ss;
  ss << open_svg(w, h);
  if (!title.empty()) ss << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << esc(title) << "</text>\n";

  std::map<std::string, std::size_t> colour;
  for (std::size_t i = 0; i < grid.criteria.size(); ++i) colour[grid.criteria[i]] = i % kPaletteSize;

  const std::size_t nx = grid.nm_axis.size(), ny = grid.l_axis.size();
  const double cw = static_cast<double>(plot) / static_cast<double>(nx);
  const double ch = static_cast<double>(plot) / static_cast<double>(ny);
  for (std::size_t li = 0; li < ny; ++li)
    for (std::size_t ni = 0; ni < nx; ++ni) {
      const auto& c = grid.cells[li][ni];
      const std::string fill = c.indeterminate ? "#d9d9d9" : kPalette[colour[c.winner]];
      ss << "<rect x=\"" << fmt(left + cw * static_cast<double>(ni)) << "\" y=\""
         << fmt(top + plot - ch * static_cast<double>(li + 1)) << "\" width=\"" << fmt(cw + 0.5) << "\" height=\""
         << fmt(ch + 0.5) << "\" fill=\"" << fill << "\"/>\n";
    }
  ss << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot << "\" height=\"" << plot
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  ss << "<text x=\"" << left << "\" y=\"" << top + plot + 15 << "\">" << fmt(grid.nm_axis.front()) << "</text>\n";
  ss << "<text x=\"" << left + plot << "\" y=\"" << top + plot + 15 << "\" text-anchor=\"end\">"
     << fmt(grid.nm_axis.back()) << "</text>\n";
  ss << "<text x=\"" << left + plot / 2 << "\" y=\"" << top + plot + 35 << "\" text-anchor=\"middle\">nm (log)</text>\n";
  ss << "<text x=\"" << left - 5 << "\" y=\"" << top + plot << "\" text-anchor=\"end\">" << fmt(grid.l_axis.front())
     << "</text>\n";
  ss << "<text x=\"" << left - 5 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << fmt(grid.l_axis.back())
     << "</text>\n";
  ss << "<text x=\"15\" y=\"" << top + plot / 2 << "\" transform=\"rotate(-90 15 " << top + plot / 2
     << ")\" text-anchor=\"middle\">l (log)</text>\n";

  int y = top;
  for (const auto& name : grid.criteria) {
    ss << "<rect x=\"" << left + plot + 15 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\""
       << kPalette[colour[name]] << "\"/><text x=\"" << left + plot + 32 << "\" y=\"" << y + 10 << "\">" << esc(name)
       << "</text>\n";
    y += 18;
  }
  ss << "<rect x=\"" << left + plot + 15 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"#d9d9d9\"/><text x=\""
     << left + plot + 32 << "\" y=\"" << y + 10 << "\">indeterminate</text>\n";
  ss << "</svg>\n";
  return ss.str();
}

std::string render_pareto(std::span<const ParetoPoint> points, const std::string& title) {
  const int left = 60, top = 30, pw = 480, ph = 320;
  const int w = left + pw + 30, h = top + ph + 50;
  std::ostringstream ss;
  ss << open_svg(w, h);
  if (!title.empty()) ss << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << esc(title) << "</text>\n";
  if (points.empty()) {
    ss << "</svg>\n";
    return ss.str();
  }
  double jmin = points[0].labels, jmax = jmin, amin = points[0].accuracy, amax = amin;
  for (const auto& p : points) {
    jmin = std::min(jmin, p.labels);
    jmax = std::max(jmax, p.labels);
    amin = std::min(amin, p.accuracy);
    amax = std::max(amax, p.accuracy);
  }
  if (jmax == jmin) jmax = jmin + 1.0;
  if (amax == amin) amax = amin + 0.01;
  auto px = [&](double j) { return left + (j - jmin) / (jmax - jmin) * pw; };
  auto py = [&](double a) { return top + ph - (a - amin) / (amax - amin) * ph; };

  ss << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto frontier = pareto_frontier(points);
  std::sort(frontier.begin(), frontier.end(), [](const auto& a, const auto& b) { return a.labels < b.labels; });
  ss << "<polyline fill=\"none\" stroke=\"grey\" stroke-dasharray=\"5,4\" points=\"";
  for (const auto& p : frontier) ss << fmt(px(p.labels)) << ',' << fmt(py(p.accuracy)) << ' ';
  ss << "\"/>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    ss << "<circle cx=\"" << fmt(px(p.labels)) << "\" cy=\"" << fmt(py(p.accuracy)) << "\" r=\"4\" fill=\""
       << kPalette[i % kPaletteSize] << "\"/><text x=\"" << fmt(px(p.labels) + 6) << "\" y=\""
       << fmt(py(p.accuracy) - 6) << "\">" << esc(p.name) << "</text>\n";
  }
  ss << "<text x=\"" << left << "\" y=\"" << top + ph + 15 << "\">" << fmt(jmin) << "</text><text x=\"" << left + pw
     << "\" y=\"" << top + ph + 15 << "\" text-anchor=\"end\">" << fmt(jmax) << "</text>\n";
  ss << "<text x=\"" << left + pw / 2 << "\" y=\"" << top + ph + 35 << "\" text-anchor=\"middle\">labels</text>\n";
  ss << "<text x=\"" << left - 5 << "\" y=\"" << top + ph << "\" text-anchor=\"end\">" << fmt(amin)
     << "</text><text x=\"" << left - 5 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << fmt(amax)
     << "</text>\n";
  ss << "</svg>\n";
  return ss.str();
}

std::string render_cd_diagram(const CdDiagram& d, const std::string& title) {
  const std::size_t k = d.names.size();
  const int left = 40, axis_y = 60, pw = 520;
  const int h = axis_y + 40 + static_cast<int>(k) * 16 + static_cast<int>(d.groups.size()) * 8;
  std::ostringstream ss;
  ss << open_svg(left * 2 + pw, h);
  if (!title.empty()) ss << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << esc(title) << "</text>\n";
  const double lo = 1.0, hi = std::max(2.0, static_cast<double>(k));
  auto px = [&](double r) { return left + (r - lo) / (hi - lo) * pw; };

  ss << "<line x1=\"" << left << "\" y1=\"" << axis_y << "\" x2=\"" << left + pw << "\" y2=\"" << axis_y
     << "\" stroke=\"black\"/>\n";
  for (std::size_t r = 1; r <= static_cast<std::size_t>(hi); ++r)
    ss << "<text x=\"" << fmt(px(static_cast<double>(r))) << "\" y=\"" << axis_y - 6 << "\" text-anchor=\"middle\">" << r
       << "</text>\n";
  ss << "<line x1=\"" << left << "\" y1=\"" << axis_y - 30 << "\" x2=\"" << fmt(px(lo + d.critical_difference))
     << "\" y2=\"" << axis_y - 30 << "\" stroke=\"black\" stroke-width=\"2\"/><text x=\"" << left << "\" y=\""
     << axis_y - 34 << "\">CD = " << fmt(d.critical_difference) << "</text>\n";

  int gy = axis_y + 8;
  for (const auto& [a, b] : d.groups) {
    if (a == b) continue;
    ss << "<line x1=\"" << fmt(px(d.mean_ranks[a]) - 3) << "\" y1=\"" << gy << "\" x2=\"" << fmt(px(d.mean_ranks[b]) + 3)
       << "\" y2=\"" << gy << "\" stroke=\"black\" stroke-width=\"3\"/>\n";
    gy += 8;
  }
  int ty = gy + 14;
  for (std::size_t i = 0; i < k; ++i) {
    ss << "<line x1=\"" << fmt(px(d.mean_ranks[i])) << "\" y1=\"" << axis_y << "\" x2=\"" << fmt(px(d.mean_ranks[i]))
       << "\" y2=\"" << ty - 4 << "\" stroke=\"#888\"/><text x=\"" << fmt(px(d.mean_ranks[i]) + 3) << "\" y=\"" << ty
       << "\">" << esc(d.names[i]) << " (" << fmt(d.mean_ranks[i]) << ")</text>\n";
    ty += 16;
  }
  ss << "</svg>\n";
  return ss.str();
}

}  // namespace alstop
