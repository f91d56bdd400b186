#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "mrgrank/corpus.hpp"

namespace mrgrank {

enum class VarianceModel { Poisson, Empirical };

struct SolverConfig {
  double damping = 0.85;
  std::size_t walks_per_node = 1000;
  std::size_t max_walk_length = 100;
  std::uint64_t rng_seed = 0;
  VarianceModel variance = VarianceModel::Poisson;
  unsigned threads = 0;  // 0: hardware concurrency
  double exact_tolerance = 1e-12;
  std::size_t exact_max_iterations = 10000;

  void validate() const;
};

/// alpha[from][to] scales the affinity block from one item kind to another.
/// Each source kind's weights form a simplex by default.
struct MixingWeights {
  std::array<std::array<double, kKindCount>, kKindCount> alpha{};

  static MixingWeights defaults();
  double at(ItemKind from, ItemKind to) const {
    return alpha[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }
  void set(ItemKind from, ItemKind to, double value) {
    alpha[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] = value;
  }
  void validate() const;
};

struct SimilarityParams {
  double threshold = 0.2;   // keep pairs with cosine strictly above this
  std::size_t top_k = 50;   // per-post neighbour cap (union of both endpoints)
};

struct ClusterParams {
  std::size_t representatives = 8;
  std::size_t edge_threshold = 3;
  std::size_t default_level = 4;
};

struct LayoutParams {
  double margin = 0.08;
  double min_separation = 0.02;
  std::size_t stress_iterations = 300;
  std::size_t representative_iterations = 200;
  std::size_t density_resolution = 96;
};

struct FlowParams {
  double spiral_angle_deg = 25.0;
  std::size_t max_targets = 10;
  double min_join_fraction = 0.1;
  std::size_t spiral_samples = 12;
  std::size_t bundle_points = 9;
  std::size_t bundle_iterations = 60;
  double bundle_threshold = 0.05;
  double spring_constant = 0.1;
  double initial_step = 0.3;
  double cooling = 0.95;
};

struct EngineConfig {
  SolverConfig solver;
  MixingWeights alpha = MixingWeights::defaults();
  SimilarityParams similarity;
  ClusterParams clustering;
  LayoutParams layout;
  FlowParams flows;

  void validate() const;
};

EngineConfig parse_config(const nlohmann::json& j);
EngineConfig load_config(const std::string& path);
nlohmann::json to_json(const EngineConfig& config);

}  // namespace mrgrank
