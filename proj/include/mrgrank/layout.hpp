#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrgrank/clustering.hpp"
#include "mrgrank/config.hpp"
#include "mrgrank/geometry.hpp"

namespace mrgrank {

/// Values sampled at cell centres of an nx-by-ny grid over the canvas,
/// row-major with y as the slow index.
struct DensityField {
  Box canvas;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  double cell_area() const;
  double integral() const;
  Vec2 sample_point(std::size_t ix, std::size_t iy) const;
};

struct Kernel {
  Vec2 center;
  double bandwidth = 0.0;
  double weight = 0.0;
};

/// Sum of Gaussian kernels, each rescaled so that its mass inside the canvas
/// equals its weight.
DensityField density_field(std::span<const Kernel> kernels, const Box& canvas, std::size_t resolution);

/// Stress-majorization placement of the cluster graph scaled into the canvas
/// margin. Disconnected pairs use one more than the largest graph distance.
std::vector<Vec2> layout_clusters(const ClusterGraph& graph, const LayoutParams& params,
                                  std::uint64_t seed, const Box& canvas = {});

/// Force-directed placement of k points inside a convex cell, with mutual
/// repulsion, boundary repulsion and a pull towards the centroid. Every move
/// that would leave the cell is shortened until it stays inside.
std::vector<Vec2> layout_representatives(const Polygon& cell, std::size_t k,
                                         const LayoutParams& params, std::uint64_t seed);

struct ClusterLayout {
  std::size_t node = 0;
  std::vector<Index> members;
  std::vector<Index> representatives;
  std::vector<Vec2> positions;         // parallel to representatives
  std::vector<std::size_t> assigned;   // parallel to members
  Vec2 center;
  Polygon cell;
};

struct LayoutResult {
  ItemKind kind = ItemKind::Hashtag;
  std::size_t level = 0;
  Box canvas;
  std::vector<ClusterLayout> clusters;
  ClusterGraph graph;
  DensityField density;
};

/// Full pipeline for one cut of the hierarchy. `scores` and `affinity` are
/// indexed by local item index within the kind.
LayoutResult compute_layout(const ClusterModel& model, std::size_t level,
                            std::span<const double> scores, const SparseMatrix& affinity,
                            const ClusterParams& cluster_params, const LayoutParams& params,
                            std::uint64_t seed);

nlohmann::json to_json(const LayoutResult& layout, std::span<const std::string> ids,
                       std::span<const double> scores);

}  // namespace mrgrank
