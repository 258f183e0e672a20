#pragma once

#include <span>
#include <string>

#include "alstop/cost.hpp"
#include "alstop/stats.hpp"

namespace alstop {

// Cell colours per winning criterion, grey for indeterminate cells. Axes are log-scaled.
std::string render_region_map(const RegionGrid& grid, const std::string& title = "");
// Scatter of (labels, accuracy) with the frontier drawn as a dashed line.
std::string render_pareto(std::span<const ParetoPoint> points, const std::string& title = "");
// Rank axis, one tick per criterion, and a bar per group.
std::string render_cd_diagram(const CdDiagram& diagram, const std::string& title = "");

}  // namespace alstop
