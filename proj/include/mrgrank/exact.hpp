#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mrgrank/graph.hpp"

namespace mrgrank {

/// Scores, and when produced by the sampler, their variance and VMR.
struct RankingState {
  std::vector<double> score;
  std::vector<double> variance;      // empty unless has_variance
  std::vector<double> uncertainty;   // empty unless has_uncertainty
  bool has_variance = false;
  bool has_uncertainty = false;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Power iteration for the fixed point r_j = d * sum_i m_ij r_i + (1-d) w_j,
/// with m_ij the row-oriented transition probability from i to j. Dangling
/// mass is dropped. Throws ConvergenceError carrying the last residual when
/// max_iterations is exhausted.
RankingState solve_exact(const HeterogeneousGraph& graph, double damping, double tolerance,
                         std::size_t max_iterations);

RankingState solve_exact(const HeterogeneousGraph& graph, const SolverConfig& config);

/// || R - (d M^T R + (1-d) W) ||_inf
double fixed_point_residual(const HeterogeneousGraph& graph, double damping,
                            std::span<const double> score);

}  // namespace mrgrank
