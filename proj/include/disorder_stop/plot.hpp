#pragma once

#include "disorder_stop/model.hpp"

#include <string>
#include <vector>

namespace dstop {

struct PlotSeries {
    std::string label;
    Boundary boundary;
};

/// Standalone SVG: t on the horizontal axis, a(t) on the vertical axis, one
/// polyline per series.
std::string render_boundary_svg(const std::vector<PlotSeries>& series);

}  // namespace dstop
