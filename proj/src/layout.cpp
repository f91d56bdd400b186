#include "mrgrank/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

#include "mrgrank/error.hpp"

namespace mrgrank {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double axis_mass(double mu, double h, double a, double b) {
  const double s = h * std::numbers::sqrt2;
  return 0.5 * (std::erf((b - mu) / s) - std::erf((a - mu) / s));
}

std::vector<std::vector<double>> hop_distances(const ClusterGraph& graph) {
  const std::size_t n = graph.cluster_count;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const ClusterEdge& e : graph.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  double longest = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    std::queue<std::size_t> q;
    d[s][s] = 0.0;
    q.push(s);
    while (!q.empty()) {
      const std::size_t x = q.front();
      q.pop();
      for (std::size_t y : adj[x]) {
        if (d[s][y] == inf) {
          d[s][y] = d[s][x] + 1.0;
          longest = std::max(longest, d[s][y]);
          q.push(y);
        }
      }
    }
  }
  for (auto& row : d) {
    for (double& v : row) {
      if (v == inf) v = longest + 1.0;
    }
  }
  return d;
}

void enforce_separation(std::vector<Vec2>& pts, double delta, const Box& canvas) {
  for (int round = 0; round < 500; ++round) {
    bool moved = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        Vec2 diff = pts[j] - pts[i];
        double dist = norm(diff);
        if (dist >= delta) continue;
        if (dist < 1e-15) {
          const double angle = 2.399963229728653 * static_cast<double>(i + j);
          diff = {std::cos(angle), std::sin(angle)};
          dist = 1.0;
          pts[j] = pts[i];
        }
        const double gap = norm(pts[j] - pts[i]);
        const Vec2 dir = diff * (1.0 / dist);
        const double push = 0.5 * (delta - gap) * 1.001;
        pts[i] = pts[i] - dir * push;
        pts[j] = pts[j] + dir * push;
        moved = true;
      }
    }
    for (Vec2& p : pts) {
      p.x = std::clamp(p.x, canvas.x0, canvas.x1);
      p.y = std::clamp(p.y, canvas.y0, canvas.y1);
    }
    if (!moved) return;
  }
}

}  // namespace

double DensityField::cell_area() const {
  if (nx == 0 || ny == 0) return 0.0;
  return canvas.width() / static_cast<double>(nx) * canvas.height() / static_cast<double>(ny);
}

double DensityField::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * cell_area();
}

Vec2 DensityField::sample_point(std::size_t ix, std::size_t iy) const {
  return {canvas.x0 + (static_cast<double>(ix) + 0.5) * canvas.width() / static_cast<double>(nx),
          canvas.y0 + (static_cast<double>(iy) + 0.5) * canvas.height() / static_cast<double>(ny)};
}

DensityField density_field(std::span<const Kernel> kernels, const Box& canvas, std::size_t resolution) {
  if (resolution == 0) throw Error(ErrorCode::InvalidArgument, "density resolution must be positive");
  DensityField f;
  f.canvas = canvas;
  f.nx = f.ny = resolution;
  f.values.assign(resolution * resolution, 0.0);
  std::vector<double> gx(resolution), gy(resolution);
  for (const Kernel& k : kernels) {
    if (k.weight == 0.0) continue;
    if (!(k.bandwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel bandwidth must be positive");
    const double h = k.bandwidth;
    const double mx = axis_mass(k.center.x, h, canvas.x0, canvas.x1);
    const double my = axis_mass(k.center.y, h, canvas.y0, canvas.y1);
    if (mx <= 0.0 || my <= 0.0) continue;
    const double norm_x = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi) * mx);
    const double norm_y = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi) * my);
    for (std::size_t i = 0; i < resolution; ++i) {
      const Vec2 p = f.sample_point(i, i);
      gx[i] = norm_x * std::exp(-0.5 * std::pow((p.x - k.center.x) / h, 2));
      gy[i] = norm_y * std::exp(-0.5 * std::pow((p.y - k.center.y) / h, 2));
    }
    for (std::size_t iy = 0; iy < resolution; ++iy) {
      const double wy = k.weight * gy[iy];
      double* row = f.values.data() + iy * resolution;
      for (std::size_t ix = 0; ix < resolution; ++ix) row[ix] += wy * gx[ix];
    }
  }
  return f;
}

std::vector<Vec2> layout_clusters(const ClusterGraph& graph, const LayoutParams& params,
                                  std::uint64_t seed, const Box& canvas) {
  const std::size_t n = graph.cluster_count;
  const Vec2 mid{0.5 * (canvas.x0 + canvas.x1), 0.5 * (canvas.y0 + canvas.y1)};
  if (n == 0) return {};
  if (n == 1) return {mid};

  const auto d = hop_distances(graph);
  std::mt19937_64 rng(seed);
  const double spread = std::sqrt(static_cast<double>(n));
  std::vector<Vec2> x(n);
  for (Vec2& p : x) {
    p.x = unit(rng) * spread;
    p.y = unit(rng) * spread;
  }

  for (std::size_t it = 0; it < params.stress_iterations; ++it) {
    double max_move = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 num;
      double den = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = 1.0 / (d[i][j] * d[i][j]);
        const Vec2 diff = x[i] - x[j];
        const double dist = norm(diff);
        Vec2 target = x[j];
        if (dist > 1e-12) target = target + diff * (d[i][j] / dist);
        num = num + target * w;
        den += w;
      }
      const Vec2 next = num * (1.0 / den);
      max_move = std::max(max_move, distance(next, x[i]));
      x[i] = next;
    }
    if (max_move < 1e-13) break;
  }

  Vec2 c;
  for (Vec2 p : x) c = c + p;
  c = c * (1.0 / static_cast<double>(n));
  double ext_x = 0.0, ext_y = 0.0;
  for (Vec2 p : x) {
    ext_x = std::max(ext_x, std::abs(p.x - c.x));
    ext_y = std::max(ext_y, std::abs(p.y - c.y));
  }
  const double half_w = 0.5 * canvas.width() - params.margin * canvas.width();
  const double half_h = 0.5 * canvas.height() - params.margin * canvas.height();
  double s = std::numeric_limits<double>::infinity();
  if (ext_x > 0.0) s = std::min(s, half_w / ext_x);
  if (ext_y > 0.0) s = std::min(s, half_h / ext_y);
  if (!std::isfinite(s)) s = 1.0;
  for (Vec2& p : x) p = mid + (p - c) * s;
  enforce_separation(x, params.min_separation, canvas);
  return x;
}

std::vector<Vec2> layout_representatives(const Polygon& cell, std::size_t k,
                                         const LayoutParams& params, std::uint64_t seed) {
  if (k == 0) return {};
  if (cell.size() < 3) throw Error(ErrorCode::InvalidArgument, "cell must be a polygon");
  const Vec2 c = centroid(cell);
  if (k == 1) return {c};

  auto inside = [&](Vec2 p) { return contains(cell, p, -1e-9); };
  const double s = std::sqrt(area(cell) / static_cast<double>(k));
  std::mt19937_64 rng(seed);
  std::vector<Vec2> p(k);
  for (Vec2& q : p) {
    q = c + Vec2{unit(rng) - 0.5, unit(rng) - 0.5} * s;
    for (int t = 0; t < 60 && !inside(q); ++t) q = c + (q - c) * 0.5;
    if (!inside(q)) q = c;
  }

  const double t0 = 0.1 * s;
  std::vector<Vec2> force(k);
  const std::size_t iters = std::max<std::size_t>(params.representative_iterations, 1);
  for (std::size_t it = 0; it < iters; ++it) {
    const double temp = t0 * (1.0 - static_cast<double>(it) / static_cast<double>(iters));
    for (std::size_t r = 0; r < k; ++r) {
      Vec2 f;
      for (std::size_t q = 0; q < k; ++q) {
        if (q == r) continue;
        Vec2 diff = p[r] - p[q];
        double dist = norm(diff);
        if (dist < 1e-12 * s) {
          const double angle = 2.399963229728653 * static_cast<double>(r + 1);
          diff = {std::cos(angle), std::sin(angle)};
          dist = 1e-12 * s;
          f = f + diff * (s * s / dist);
          continue;
        }
        f = f + diff * (s * s / (dist * dist));
      }
      const Vec2 to_c = c - p[r];
      f = f + to_c * (norm(to_c) / s);
      for (std::size_t e = 0; e < cell.size(); ++e) {
        const Vec2 a = cell[e], b = cell[(e + 1) % cell.size()];
        const Vec2 ab = b - a;
        const double len2 = dot(ab, ab);
        if (len2 == 0.0) continue;
        const double t = std::clamp(dot(p[r] - a, ab) / len2, 0.0, 1.0);
        const Vec2 diff = p[r] - (a + ab * t);
        const double dist = std::max(norm(diff), 1e-12 * s);
        if (dist < s) f = f + diff * (s * s / (dist * dist));
      }
      force[r] = f;
    }
    for (std::size_t r = 0; r < k; ++r) {
      const double mag = norm(force[r]);
      if (mag == 0.0 || temp == 0.0) continue;
      Vec2 step = force[r] * (std::min(mag, temp) / mag);
      for (int t = 0; t < 40; ++t) {
        if (inside(p[r] + step)) {
          p[r] = p[r] + step;
          break;
        }
        step = step * 0.5;
      }
    }
  }
  return p;
}

LayoutResult compute_layout(const ClusterModel& model, std::size_t level,
                            std::span<const double> scores, const SparseMatrix& affinity,
                            const ClusterParams& cluster_params, const LayoutParams& params,
                            std::uint64_t seed) {
  if (scores.size() != model.leaf_count()) {
    throw Error(ErrorCode::InvalidArgument, "score vector does not match the hierarchy");
  }
  LayoutResult out;
  out.kind = model.kind();
  out.level = level;
  const auto partition = model.partition(level);
  out.graph = build_cluster_graph(partition, affinity, cluster_params.edge_threshold);
  const auto centers = layout_clusters(out.graph, params, seed, out.canvas);
  const auto cells = voronoi_cells(centers, out.canvas);

  const double grid = std::max(out.canvas.width(), out.canvas.height()) /
                      static_cast<double>(std::max<std::size_t>(params.density_resolution, 1));
  std::vector<Kernel> kernels;
  for (std::size_t c = 0; c < partition.size(); ++c) {
    ClusterLayout cl;
    cl.node = partition[c].node;
    cl.members = partition[c].members;
    cl.center = centers[c];
    cl.cell = cells[c];
    const auto reps = select_representatives(cl.members, scores, model.ids(), affinity,
                                             cluster_params.representatives);
    cl.representatives = reps.items;
    cl.assigned = reps.assigned;
    cl.positions = layout_representatives(cl.cell, reps.items.size(), params,
                                          splitmix64(seed ^ splitmix64(c + 1)));
    const double h = std::max(diameter(cl.cell) / 6.0, 2.0 * grid);
    std::vector<double> weight(reps.items.size(), 0.0);
    for (std::size_t m = 0; m < cl.members.size(); ++m) {
      if (reps.items[reps.assigned[m]] != cl.members[m]) weight[reps.assigned[m]] += 1.0;
    }
    for (std::size_t r = 0; r < reps.items.size(); ++r) {
      if (weight[r] > 0.0) kernels.push_back({cl.positions[r], h, weight[r]});
    }
    out.clusters.push_back(std::move(cl));
  }
  out.density = density_field(kernels, out.canvas, params.density_resolution);
  return out;
}

namespace {

nlohmann::json point_json(Vec2 p) { return nlohmann::json::array({p.x, p.y}); }

}  // namespace

nlohmann::json to_json(const LayoutResult& layout, std::span<const std::string> ids,
                       std::span<const double> scores) {
  nlohmann::json j;
  j["kind"] = to_string(layout.kind);
  j["level"] = layout.level;
  j["canvas"] = {{"x0", layout.canvas.x0}, {"y0", layout.canvas.y0},
                 {"x1", layout.canvas.x1}, {"y1", layout.canvas.y1}};
  nlohmann::json clusters = nlohmann::json::array();
  for (const ClusterLayout& cl : layout.clusters) {
    nlohmann::json c;
    c["id"] = cluster_id(layout.kind, layout.level, cl.node);
    c["size"] = cl.members.size();
    double total = 0.0;
    for (Index m : cl.members) total += scores[m];
    c["score"] = total;
    c["center"] = point_json(cl.center);
    nlohmann::json cell = nlohmann::json::array();
    for (Vec2 p : cl.cell) cell.push_back(point_json(p));
    c["cell"] = std::move(cell);
    std::vector<std::size_t> assigned_count(cl.representatives.size(), 0);
    for (std::size_t m = 0; m < cl.members.size(); ++m) {
      if (cl.representatives[cl.assigned[m]] != cl.members[m]) ++assigned_count[cl.assigned[m]];
    }
    nlohmann::json reps = nlohmann::json::array();
    for (std::size_t r = 0; r < cl.representatives.size(); ++r) {
      reps.push_back({{"id", ids[cl.representatives[r]]},
                      {"score", scores[cl.representatives[r]]},
                      {"position", point_json(cl.positions[r])},
                      {"assigned", assigned_count[r]}});
    }
    c["representatives"] = std::move(reps);
    clusters.push_back(std::move(c));
  }
  j["clusters"] = std::move(clusters);
  nlohmann::json edges = nlohmann::json::array();
  for (const ClusterEdge& e : layout.graph.edges) {
    edges.push_back({{"source", cluster_id(layout.kind, layout.level, layout.clusters[e.a].node)},
                     {"target", cluster_id(layout.kind, layout.level, layout.clusters[e.b].node)},
                     {"connections", e.connections}});
  }
  j["edges"] = std::move(edges);
  j["density"] = {{"nx", layout.density.nx}, {"ny", layout.density.ny}, {"values", layout.density.values}};
  return j;
}

}  // namespace mrgrank
