#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mrgrank/config.hpp"
#include "mrgrank/geometry.hpp"

namespace mrgrank {

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

struct FlowTarget {
  std::size_t cluster = 0;
  Vec2 position;
  double value = 0.0;
};

/// Picks up to `max_targets` clusters other than `source` with positive flow,
/// largest first, ties by cluster index.
std::vector<FlowTarget> select_targets(std::size_t source, std::span<const double> values,
                                       std::span<const Vec2> positions, std::size_t max_targets);

struct FlowTreeNode {
  Vec2 position;
  std::size_t parent = kNoNode;
  std::optional<std::size_t> target;  // cluster index for target nodes
  double own_value = 0.0;             // flow delivered at this node
  double value = 0.0;                 // flow on the edge into this node
  std::vector<Vec2> edge;             // polyline from parent to this node
  std::size_t group = kNoNode;
};

/// Node 0 is the root at the source position.
struct FlowTree {
  std::size_t source = 0;
  std::vector<FlowTreeNode> nodes;

  std::vector<std::size_t> children(std::size_t node) const;
  /// Node chain from the root to `node`, both included.
  std::vector<std::size_t> chain(std::size_t node) const;
};

/// Greedy spiral tree: pairs of active nodes are joined where their
/// logarithmic spirals towards the root meet, largest join radius first.
/// When the inner node already lies inside the outer node's spiral region
/// the outer node hangs directly off the inner one.
FlowTree spiral_tree(std::size_t source, Vec2 root, std::span<const FlowTarget> targets,
                     const FlowParams& params);

struct Compatibility {
  double angle = 0.0;
  double scale = 0.0;
  double position = 0.0;
  double total = 0.0;
};

/// Compatibility of segments P=(p0,p1) and Q=(q0,q1). The angle term lies in
/// [0,1], the position term in (0,1]; the scale term 2/(l_avg*l_min +
/// l_min/l_avg) is positive and unbounded. Degenerate segments score 0.
Compatibility compatibility(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1);

std::vector<Vec2> resample(std::span<const Vec2> polyline, std::size_t count);

struct BundleStats {
  std::size_t compatible_pairs = 0;
  std::size_t groups = 0;
};

/// Resamples every tree edge to `bundle_points` and pulls compatible edges of
/// different sources towards each other. Edge end points never move. Sets
/// `group` on every non-root node.
BundleStats bundle_flows(std::vector<FlowTree>& trees, const FlowParams& params);

struct FlowPath {
  std::size_t source = 0;
  std::size_t target = 0;
  double value = 0.0;
  std::vector<Vec2> points;
  std::vector<double> segment_values;
  std::size_t bundle_group = kNoNode;
};

/// One path per target, the concatenated edge polylines from the root.
std::vector<FlowPath> flow_paths(const FlowTree& tree);

}  // namespace mrgrank
