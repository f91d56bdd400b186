#pragma once

#include <span>
#include <string>
#include <vector>

#include "mrgrank/flows.hpp"
#include "mrgrank/layout.hpp"

namespace mrgrank {

/// Standalone SVG: Voronoi cells, cluster nodes sized by score, density
/// shading and the flow trees with stroke width proportional to flow.
std::string render_svg(const LayoutResult& layout, std::span<const std::string> ids,
                       std::span<const double> scores, const std::vector<FlowTree>& flows,
                       double size = 800.0);

}  // namespace mrgrank
