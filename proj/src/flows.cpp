#include "mrgrank/flows.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mrgrank/error.hpp"

namespace mrgrank {

std::vector<FlowTarget> select_targets(std::size_t source, std::span<const double> values,
                                       std::span<const Vec2> positions, std::size_t max_targets) {
  if (values.size() != positions.size()) {
    throw Error(ErrorCode::InvalidArgument, "flow values and positions differ in length");
  }
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (c != source && values[c] > 0.0) order.push_back(c);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] != values[b] ? values[a] > values[b] : a < b;
  });
  if (order.size() > max_targets) order.resize(max_targets);
  std::vector<FlowTarget> out;
  for (std::size_t c : order) out.push_back({c, positions[c], values[c]});
  return out;
}

std::vector<std::size_t> FlowTree::children(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].parent == node) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FlowTree::chain(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t x = node; x != kNoNode; x = nodes[x].parent) out.push_back(x);
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

struct Polar {
  double r = 0.0;
  double theta = 0.0;
};

Polar polar(Vec2 root, Vec2 p) {
  const Vec2 d = p - root;
  return {norm(d), std::atan2(d.y, d.x)};
}

Vec2 from_polar(Vec2 root, double r, double theta) {
  return root + Vec2{r * std::cos(theta), r * std::sin(theta)};
}

// Spiral from radius rho out to the node at (r0, theta0); theta grows by
// sign * t * ln(r0 / rho') as rho' shrinks.
std::vector<Vec2> spiral_edge(Vec2 root, double rho, double r0, double theta0, double sign,
                              double t, std::size_t samples) {
  std::vector<Vec2> pts;
  const std::size_t m = std::max<std::size_t>(samples, 1);
  for (std::size_t k = 0; k <= m; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(m);
    const double r = rho * std::pow(r0 / rho, f);
    pts.push_back(from_polar(root, r, theta0 + sign * t * std::log(r0 / r)));
  }
  return pts;
}

}  // namespace

FlowTree spiral_tree(std::size_t source, Vec2 root, std::span<const FlowTarget> targets,
                     const FlowParams& params) {
  const double alpha = params.spiral_angle_deg * std::numbers::pi / 180.0;
  if (!(alpha > 0.0 && alpha < std::numbers::pi / 2)) {
    throw Error(ErrorCode::InvalidArgument, "spiral angle must lie in (0, 90) degrees");
  }
  const double t = std::tan(alpha);
  FlowTree tree;
  tree.source = source;
  tree.nodes.push_back({root, kNoNode, std::nullopt, 0.0, 0.0, {}, kNoNode});
  std::vector<std::size_t> active;
  for (const FlowTarget& ft : targets) {
    if (ft.value < 0.0) throw Error(ErrorCode::InvalidArgument, "negative flow value");
    if (ft.position == root) throw Error(ErrorCode::InvalidArgument, "flow target coincides with source");
    tree.nodes.push_back({ft.position, kNoNode, ft.cluster, ft.value, 0.0, {}, kNoNode});
    active.push_back(tree.nodes.size() - 1);
  }

  while (active.size() >= 2) {
    double best_key = -1.0;
    std::size_t best_i = 0, best_j = 0;
    bool best_attach = false;
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const Polar a = polar(root, tree.nodes[active[i]].position);
        const Polar b = polar(root, tree.nodes[active[j]].position);
        double gap = std::remainder(b.theta - a.theta, 2.0 * std::numbers::pi);
        gap = std::abs(gap);
        const double rho = std::sqrt(a.r * b.r) * std::exp(-gap / (2.0 * t));
        const double inner = std::min(a.r, b.r);
        const bool attach = rho >= inner;
        const double key = attach ? inner : rho;
        if (!attach && rho < params.min_join_fraction * inner) continue;
        if (key > best_key) {
          best_key = key;
          best_i = i;
          best_j = j;
          best_attach = attach;
        }
      }
    }
    if (best_key < 0.0) break;

    std::size_t a = active[best_i], b = active[best_j];
    Polar pa = polar(root, tree.nodes[a].position), pb = polar(root, tree.nodes[b].position);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_j));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_i));
    if (best_attach) {
      if (pb.r < pa.r || (pb.r == pa.r && b < a)) std::swap(a, b);
      tree.nodes[b].parent = a;
      tree.nodes[b].edge = {tree.nodes[a].position, tree.nodes[b].position};
      active.push_back(a);
      continue;
    }
    // Make a the node with the smaller angle, b = a + gap.
    double gap = std::remainder(pb.theta - pa.theta, 2.0 * std::numbers::pi);
    if (gap < 0.0) {
      std::swap(a, b);
      std::swap(pa, pb);
      gap = -gap;
    }
    const double rho = std::sqrt(pa.r * pb.r) * std::exp(-gap / (2.0 * t));
    const double theta_s = pa.theta + t * std::log(pa.r / rho);
    FlowTreeNode steiner{from_polar(root, rho, theta_s), kNoNode, std::nullopt, 0.0, 0.0, {}, kNoNode};
    tree.nodes.push_back(steiner);
    const std::size_t s = tree.nodes.size() - 1;
    tree.nodes[a].parent = s;
    tree.nodes[a].edge = spiral_edge(root, rho, pa.r, pa.theta, +1.0, t, params.spiral_samples);
    tree.nodes[b].parent = s;
    tree.nodes[b].edge = spiral_edge(root, rho, pb.r, pb.theta, -1.0, t, params.spiral_samples);
    // Pin the shared joint exactly.
    tree.nodes[a].edge.front() = tree.nodes[s].position;
    tree.nodes[b].edge.front() = tree.nodes[s].position;
    tree.nodes[a].edge.back() = tree.nodes[a].position;
    tree.nodes[b].edge.back() = tree.nodes[b].position;
    active.push_back(s);
  }
  for (std::size_t x : active) {
    tree.nodes[x].parent = 0;
    tree.nodes[x].edge = {root, tree.nodes[x].position};
  }

  // Edge values: own flow plus everything downstream.
  std::vector<std::vector<std::size_t>> kids(tree.nodes.size());
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) kids[tree.nodes[i].parent].push_back(i);
  std::vector<std::size_t> order{0};
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t c : kids[order[k]]) order.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    FlowTreeNode& n = tree.nodes[*it];
    n.value = n.own_value;
    for (std::size_t c : kids[*it]) n.value += tree.nodes[c].value;
  }
  return tree;
}

Compatibility compatibility(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  Compatibility c;
  const Vec2 p = p1 - p0, q = q1 - q0;
  const double lp = norm(p), lq = norm(q);
  if (lp == 0.0 || lq == 0.0) return c;
  c.angle = std::min(1.0, std::abs(dot(p, q)) / (lp * lq));
  const double avg = 0.5 * (lp + lq);
  const double lmin = std::min(lp, lq);
  c.scale = 2.0 / (avg * lmin + lmin / avg);
  const double mid = distance((p0 + p1) * 0.5, (q0 + q1) * 0.5);
  c.position = mid == 0.0 ? 1.0 : avg / (avg + mid);
  c.total = c.angle * c.scale * c.position;
  return c;
}

std::vector<Vec2> resample(std::span<const Vec2> polyline, std::size_t count) {
  if (polyline.empty()) return {};
  if (count < 2) throw Error(ErrorCode::InvalidArgument, "resample needs at least two points");
  std::vector<double> cum(polyline.size(), 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    cum[i] = cum[i - 1] + distance(polyline[i - 1], polyline[i]);
  }
  const double total = cum.back();
  std::vector<Vec2> out;
  out.reserve(count);
  std::size_t seg = 1;
  for (std::size_t k = 0; k < count; ++k) {
    if (k == 0) {
      out.push_back(polyline.front());
      continue;
    }
    if (k + 1 == count) {
      out.push_back(polyline.back());
      continue;
    }
    const double s = total * static_cast<double>(k) / static_cast<double>(count - 1);
    while (seg + 1 < polyline.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double f = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    out.push_back(polyline[seg - 1] + (polyline[seg] - polyline[seg - 1]) * f);
  }
  return out;
}

BundleStats bundle_flows(std::vector<FlowTree>& trees, const FlowParams& params) {
  struct EdgeRef {
    std::size_t tree;
    std::size_t node;
  };
  std::vector<EdgeRef> edges;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    for (std::size_t n = 1; n < trees[t].nodes.size(); ++n) {
      auto& pts = trees[t].nodes[n].edge;
      pts = resample(pts, params.bundle_points);
      edges.push_back({t, n});
    }
  }
  const std::size_t m = edges.size();
  auto points = [&](std::size_t e) -> std::vector<Vec2>& {
    return trees[edges[e].tree].nodes[edges[e].node].edge;
  };

  struct Link {
    std::size_t other;
    double weight;
    bool flipped;
  };
  std::vector<std::vector<Link>> links(m);
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  BundleStats stats;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (edges[i].tree == edges[j].tree) continue;
      const auto& p = points(i);
      const auto& q = points(j);
      const Compatibility c = compatibility(p.front(), p.back(), q.front(), q.back());
      if (!(c.total > params.bundle_threshold)) continue;
      const bool flipped = dot(p.back() - p.front(), q.back() - q.front()) < 0.0;
      links[i].push_back({j, c.total, flipped});
      links[j].push_back({i, c.total, flipped});
      ++stats.compatible_pairs;
      const std::size_t a = find(i), b = find(j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }

  const std::size_t np = params.bundle_points;
  const double k_spring = params.spring_constant;
  std::vector<std::vector<Vec2>> next(m);
  double step = params.initial_step;
  for (std::size_t it = 0; it < params.bundle_iterations; ++it, step *= params.cooling) {
    for (std::size_t e = 0; e < m; ++e) {
      const auto& p = points(e);
      next[e] = p;
      double total_weight = 0.0;
      for (const Link& l : links[e]) total_weight += l.weight;
      const double h = std::min(step, 0.9 / (2.0 * k_spring + total_weight));
      for (std::size_t k = 1; k + 1 < np; ++k) {
        Vec2 f = (p[k - 1] + p[k + 1] - p[k] * 2.0) * k_spring;
        for (const Link& l : links[e]) {
          const auto& q = points(l.other);
          const Vec2 target = q[l.flipped ? np - 1 - k : k];
          f = f + (target - p[k]) * l.weight;
        }
        next[e][k] = p[k] + f * h;
      }
    }
    for (std::size_t e = 0; e < m; ++e) points(e) = next[e];
  }

  std::vector<std::size_t> label(m, kNoNode);
  std::size_t groups = 0;
  for (std::size_t e = 0; e < m; ++e) {
    const std::size_t r = find(e);
    if (label[r] == kNoNode) label[r] = groups++;
    trees[edges[e].tree].nodes[edges[e].node].group = label[r];
  }
  stats.groups = groups;
  return stats;
}

std::vector<FlowPath> flow_paths(const FlowTree& tree) {
  std::vector<FlowPath> out;
  for (std::size_t n = 1; n < tree.nodes.size(); ++n) {
    const FlowTreeNode& node = tree.nodes[n];
    if (!node.target) continue;
    FlowPath path;
    path.source = tree.source;
    path.target = *node.target;
    path.value = node.own_value;
    path.bundle_group = node.group;
    path.points.push_back(tree.nodes[0].position);
    for (std::size_t x : tree.chain(n)) {
      if (x == 0) continue;
      const auto& e = tree.nodes[x].edge;
      for (std::size_t k = 1; k < e.size(); ++k) {
        path.points.push_back(e[k]);
        path.segment_values.push_back(tree.nodes[x].value);
      }
    }
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace mrgrank
