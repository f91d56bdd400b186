#include <doctest.h>

#include <cmath>
#include <set>

#include "mrgrank/error.hpp"
#include "mrgrank/flows.hpp"
#include "oracles.hpp"

using namespace mrgrank;

namespace {

std::vector<FlowTarget> random_targets(gen::Rng& rng, Vec2 root, std::size_t n) {
  std::vector<FlowTarget> t;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 p;
    do {
      p = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    } while (distance(p, root) < 0.05);
    t.push_back({i + 1, p, rng.uniform(0.01, 1.0)});
  }
  return t;
}

void check_conservation(const FlowTree& tree) {
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    double sum = tree.nodes[k].own_value;
    for (std::size_t c : tree.children(k)) sum += tree.nodes[c].value;
    CHECK(std::abs(tree.nodes[k].value - sum) <= 1e-9);
  }
}

double path_length(const std::vector<Vec2>& pts) {
  double l = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) l += distance(pts[i - 1], pts[i]);
  return l;
}

}  // namespace

TEST_CASE("target selection") {
  const double values[] = {5.0, 0.0, 2.0, 2.0, 7.0, 1.0};
  const Vec2 pos[6] = {};
  const auto t = select_targets(0, values, pos, 3);
  REQUIRE(t.size() == 3);
  CHECK(t[0].cluster == 4);
  CHECK(t[1].cluster == 2);
  CHECK(t[2].cluster == 3);
  CHECK(select_targets(0, values, pos, 0).empty());
  const double zeros[] = {1.0, 0.0};
  CHECK(select_targets(0, zeros, std::span<const Vec2>(pos, 2), 5).empty());
  CHECK_THROWS_AS(select_targets(0, values, std::span<const Vec2>(pos, 2), 3), Error);
}

TEST_CASE("a single target is a straight segment") {
  const Vec2 root{0.2, 0.2};
  const FlowTarget t[] = {{1, {0.8, 0.6}, 0.5}};
  const auto tree = spiral_tree(0, root, t, {});
  REQUIRE(tree.nodes.size() == 2);
  const auto& e = tree.nodes[1].edge;
  CHECK(e.front() == root);
  CHECK(e.back() == t[0].position);
  for (const Vec2& p : e) CHECK(std::abs(cross(p - root, t[0].position - root)) <= 1e-12);
  CHECK(tree.nodes[0].value == 0.5);
  CHECK(tree.nodes[1].value == 0.5);
}

TEST_CASE("no targets give an empty tree") {
  const auto tree = spiral_tree(0, {0.5, 0.5}, {}, {});
  CHECK(tree.nodes.size() == 1);
  CHECK(flow_paths(tree).empty());
}

TEST_CASE("targets in one direction share a trunk") {
  const Vec2 root{0.1, 0.5};
  const FlowTarget t[] = {{1, {0.9, 0.42}, 1.0}, {2, {0.9, 0.58}, 1.0}, {3, {0.8, 0.5}, 0.5}};
  const auto tree = spiral_tree(0, root, t, {});
  const auto paths = flow_paths(tree);
  REQUIRE(paths.size() == 3);
  std::size_t shared = 0;
  for (std::size_t a = 0; a < paths.size(); ++a) {
    for (std::size_t b = a + 1; b < paths.size(); ++b) {
      // Common prefix longer than the root point.
      std::size_t k = 0;
      while (k < paths[a].points.size() && k < paths[b].points.size() &&
             distance(paths[a].points[k], paths[b].points[k]) < 1e-12) {
        ++k;
      }
      if (k >= 2) ++shared;
    }
  }
  CHECK(shared >= 1);
  // The root has a single child carrying everything.
  CHECK(tree.children(0).size() == 1);
  CHECK(tree.nodes[tree.children(0)[0]].value == doctest::Approx(2.5));
}

TEST_CASE("property: spiral trees conserve flow and approach each target") {
  gen::Rng rng(71);
  FlowParams params;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 root{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
    const auto targets = random_targets(rng, root, 1 + rng.below(10));
    const auto tree = spiral_tree(0, root, targets, params);
    check_conservation(tree);
    double total = 0.0;
    for (const auto& t : targets) total += t.value;
    CHECK(std::abs(tree.nodes[0].value - total) <= 1e-9);

    const auto paths = flow_paths(tree);
    REQUIRE(paths.size() == targets.size());
    std::set<std::size_t> seen;
    for (const auto& p : paths) {
      seen.insert(p.target);
      CHECK(p.points.front() == root);
      const FlowTarget* t = nullptr;
      for (const auto& x : targets) {
        if (x.cluster == p.target) t = &x;
      }
      REQUIRE(t != nullptr);
      CHECK(p.value == t->value);
      CHECK(distance(p.points.back(), t->position) <= 1e-12);
      CHECK(p.segment_values.size() + 1 == p.points.size());
      for (double v : p.segment_values) CHECK(v >= p.value - 1e-12);
      // Each path moves monotonically outward from the source, and its last
      // point is the target.
      for (std::size_t k = 1; k < p.points.size(); ++k) {
        CHECK(distance(p.points[k], root) >= distance(p.points[k - 1], root) - 1e-9);
      }
    }
    CHECK(seen.size() == targets.size());
  }
}

TEST_CASE("spiral tree validation") {
  FlowParams bad;
  bad.spiral_angle_deg = 90.0;
  const FlowTarget t[] = {{1, {0.8, 0.6}, 0.5}};
  CHECK_THROWS_AS(spiral_tree(0, {0.2, 0.2}, t, bad), Error);
  const FlowTarget neg[] = {{1, {0.8, 0.6}, -0.5}};
  CHECK_THROWS_AS(spiral_tree(0, {0.2, 0.2}, neg, {}), Error);
  const FlowTarget same[] = {{1, {0.2, 0.2}, 0.5}};
  CHECK_THROWS_AS(spiral_tree(0, {0.2, 0.2}, same, {}), Error);
}

TEST_CASE("compatibility of identical, perpendicular and concentric segments") {
  const auto same = compatibility({0, 0}, {1, 0}, {0, 0}, {1, 0});
  CHECK(same.angle == doctest::Approx(1.0));
  CHECK(same.scale == doctest::Approx(1.0));
  CHECK(same.position == doctest::Approx(1.0));
  CHECK(same.total == doctest::Approx(1.0));

  const auto perp = compatibility({0, 0}, {1, 0}, {3, 3}, {3, 4});
  CHECK(perp.angle == doctest::Approx(0.0));
  CHECK(perp.total == doctest::Approx(0.0));

  const auto cross_mid = compatibility({-1, 0}, {1, 0}, {-0.5, -0.5}, {0.5, 0.5});
  CHECK(cross_mid.position == 1.0);

  const auto degenerate = compatibility({0, 0}, {0, 0}, {0, 0}, {1, 0});
  CHECK(degenerate.total == 0.0);
  CHECK(degenerate.angle == 0.0);
}

TEST_CASE("property: compatibility is symmetric and within its ranges") {
  gen::Rng rng(72);
  for (int k = 0; k < 2000; ++k) {
    const Vec2 p0{rng.uniform(), rng.uniform()}, p1{rng.uniform(), rng.uniform()};
    const Vec2 q0{rng.uniform(), rng.uniform()}, q1{rng.uniform(), rng.uniform()};
    const auto a = compatibility(p0, p1, q0, q1);
    const auto b = compatibility(q0, q1, p0, p1);
    const auto c = compatibility(p1, p0, q1, q0);
    for (const auto* x : {&b, &c}) {
      CHECK(x->angle == doctest::Approx(a.angle).epsilon(1e-12));
      CHECK(x->scale == doctest::Approx(a.scale).epsilon(1e-12));
      CHECK(x->position == doctest::Approx(a.position).epsilon(1e-12));
      CHECK(x->total == doctest::Approx(a.total).epsilon(1e-12));
    }
    CHECK(a.angle >= 0.0);
    CHECK(a.angle <= 1.0 + 1e-15);
    CHECK(a.position > 0.0);
    CHECK(a.position <= 1.0);
    CHECK(a.scale > 0.0);
    CHECK(a.total == doctest::Approx(a.angle * a.scale * a.position).epsilon(1e-12));
  }
}

TEST_CASE("resampling") {
  const Vec2 line[] = {{0, 0}, {1, 0}, {1, 1}};
  const auto r = resample(line, 5);
  REQUIRE(r.size() == 5);
  CHECK(r.front() == Vec2{0, 0});
  CHECK(r.back() == Vec2{1, 1});
  CHECK(r[2].x == doctest::Approx(1.0));
  CHECK(r[2].y == doctest::Approx(0.0));
  CHECK(r[1].x == doctest::Approx(0.5));
  CHECK_THROWS_AS(resample(line, 1), Error);
}

TEST_CASE("bundling pulls parallel flows of two sources together and pins end points") {
  FlowParams params;
  const FlowTarget ta[] = {{2, {0.9, 0.52}, 1.0}};
  const FlowTarget tb[] = {{3, {0.9, 0.48}, 1.0}};
  std::vector<FlowTree> trees = {spiral_tree(0, {0.1, 0.55}, ta, params),
                                 spiral_tree(1, {0.1, 0.45}, tb, params)};
  const auto before = trees;
  const auto stats = bundle_flows(trees, params);
  CHECK(stats.compatible_pairs == 1);
  CHECK(stats.groups == 1);
  const auto& ea = trees[0].nodes[1].edge;
  const auto& eb = trees[1].nodes[1].edge;
  CHECK(ea.size() == params.bundle_points);
  CHECK(ea.front() == before[0].nodes[1].edge.front());
  CHECK(ea.back() == before[0].nodes[1].edge.back());
  CHECK(eb.front() == before[1].nodes[1].edge.front());
  CHECK(eb.back() == before[1].nodes[1].edge.back());
  // Midpoints moved closer.
  const double gap_before = distance(resample(before[0].nodes[1].edge, params.bundle_points)[4],
                                     resample(before[1].nodes[1].edge, params.bundle_points)[4]);
  CHECK(distance(ea[4], eb[4]) < gap_before);
  CHECK(trees[0].nodes[1].group == trees[1].nodes[1].group);
  CHECK(trees[0].nodes[1].value == 1.0);
}

TEST_CASE("perpendicular flows are not bundled") {
  FlowParams params;
  const FlowTarget ta[] = {{2, {0.9, 0.5}, 1.0}};
  const FlowTarget tb[] = {{3, {0.5, 0.9}, 1.0}};
  std::vector<FlowTree> trees = {spiral_tree(0, {0.1, 0.5}, ta, params),
                                 spiral_tree(1, {0.5, 0.1}, tb, params)};
  const auto stats = bundle_flows(trees, params);
  CHECK(stats.compatible_pairs == 0);
  CHECK(stats.groups == 2);
  CHECK(trees[0].nodes[1].group != trees[1].nodes[1].group);
}

TEST_CASE("property: bundling keeps end points, values and conservation") {
  gen::Rng rng(73);
  FlowParams params;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FlowTree> trees;
    const std::size_t sources = 1 + rng.below(4);
    for (std::size_t s = 0; s < sources; ++s) {
      const Vec2 root{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
      trees.push_back(spiral_tree(s, root, random_targets(rng, root, 1 + rng.below(6)), params));
    }
    const auto before = trees;
    bundle_flows(trees, params);
    for (std::size_t s = 0; s < trees.size(); ++s) {
      check_conservation(trees[s]);
      for (std::size_t k = 1; k < trees[s].nodes.size(); ++k) {
        const auto& n = trees[s].nodes[k];
        CHECK(n.group != kNoNode);
        CHECK(n.edge.front() == before[s].nodes[k].edge.front());
        CHECK(n.edge.back() == before[s].nodes[k].edge.back());
        CHECK(n.value == before[s].nodes[k].value);
        for (const Vec2& p : n.edge) CHECK((std::isfinite(p.x) && std::isfinite(p.y)));
      }
      for (const auto& p : flow_paths(trees[s])) CHECK(path_length(p.points) > 0.0);
    }
  }
}
