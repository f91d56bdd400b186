#include "mrgrank/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mrgrank {

namespace {

constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

std::string render_svg(const LayoutResult& layout, std::span<const std::string> ids,
                       std::span<const double> scores, const std::vector<FlowTree>& flows,
                       double size) {
  const Box& box = layout.canvas;
  auto X = [&](double x) { return fmt((x - box.x0) / box.width() * size); };
  auto Y = [&](double y) { return fmt((1.0 - (y - box.y0) / box.height()) * size); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(size) << "\" height=\""
    << fmt(size) << "\" viewBox=\"0 0 " << fmt(size) << ' ' << fmt(size) << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  const DensityField& d = layout.density;
  double peak = 0.0;
  for (double v : d.values) peak = std::max(peak, v);
  if (peak > 0.0) {
    s << "<g id=\"density\">\n";
    const double cw = size / static_cast<double>(d.nx), ch = size / static_cast<double>(d.ny);
    for (std::size_t iy = 0; iy < d.ny; ++iy) {
      for (std::size_t ix = 0; ix < d.nx; ++ix) {
        const double v = d.values[iy * d.nx + ix] / peak;
        if (v < 0.02) continue;
        s << "<rect x=\"" << fmt(static_cast<double>(ix) * cw) << "\" y=\""
          << fmt(size - static_cast<double>(iy + 1) * ch) << "\" width=\"" << fmt(cw)
          << "\" height=\"" << fmt(ch) << "\" fill=\"#4a6fa5\" fill-opacity=\""
          << fmt(0.6 * v) << "\"/>\n";
      }
    }
    s << "</g>\n";
  }

  s << "<g id=\"cells\" fill=\"none\" stroke=\"#999999\" stroke-width=\"1\">\n";
  for (const ClusterLayout& cl : layout.clusters) {
    s << "<polygon points=\"";
    for (std::size_t k = 0; k < cl.cell.size(); ++k) {
      s << (k ? " " : "") << X(cl.cell[k].x) << ',' << Y(cl.cell[k].y);
    }
    s << "\"/>\n";
  }
  s << "</g>\n";

  double top = 0.0;
  for (std::size_t n = 0; n < scores.size(); ++n) top = std::max(top, scores[n]);
  s << "<g id=\"representatives\" fill=\"#333333\">\n";
  for (const ClusterLayout& cl : layout.clusters) {
    for (std::size_t r = 0; r < cl.representatives.size(); ++r) {
      const Index item = cl.representatives[r];
      const double rad = 2.0 + (top > 0.0 ? 6.0 * std::sqrt(scores[item] / top) : 0.0);
      s << "<circle cx=\"" << X(cl.positions[r].x) << "\" cy=\"" << Y(cl.positions[r].y)
        << "\" r=\"" << fmt(rad) << "\"><title>" << escape(ids[item]) << "</title></circle>\n";
    }
  }
  s << "</g>\n";

  double widest = 0.0;
  for (const FlowTree& t : flows) {
    for (const FlowTreeNode& n : t.nodes) widest = std::max(widest, n.value);
  }
  s << "<g id=\"flows\" fill=\"none\" stroke-linecap=\"round\" stroke-opacity=\"0.8\">\n";
  for (std::size_t f = 0; f < flows.size(); ++f) {
    const char* color = kPalette[f % std::size(kPalette)];
    for (std::size_t n = 1; n < flows[f].nodes.size(); ++n) {
      const FlowTreeNode& node = flows[f].nodes[n];
      const double w = 1.0 + (widest > 0.0 ? 9.0 * node.value / widest : 0.0);
      s << "<polyline stroke=\"" << color << "\" stroke-width=\"" << fmt(w) << "\" points=\"";
      for (std::size_t k = 0; k < node.edge.size(); ++k) {
        s << (k ? " " : "") << X(node.edge[k].x) << ',' << Y(node.edge[k].y);
      }
      s << "\"/>\n";
    }
    const Vec2 root = flows[f].nodes.front().position;
    s << "<circle cx=\"" << X(root.x) << "\" cy=\"" << Y(root.y) << "\" r=\"7\" fill=\"" << color
      << "\"/>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

}  // namespace mrgrank
