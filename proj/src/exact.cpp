#include "mrgrank/exact.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrgrank/error.hpp"

namespace mrgrank {

namespace {

void apply_operator(const HeterogeneousGraph& graph, double damping, std::span<const double> in,
                    std::vector<double>& out) {
  const SparseMatrix& m = graph.transition();
  auto priors = graph.priors();
  out.assign(in.size(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double ri = in[i];
    if (ri == 0.0) continue;
    auto idx = m.row_indices(i);
    auto vals = m.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] += vals[k] * ri;
  }
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = damping * out[j] + (1.0 - damping) * priors[j];
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

}  // namespace

double fixed_point_residual(const HeterogeneousGraph& graph, double damping,
                            std::span<const double> score) {
  std::vector<double> next;
  apply_operator(graph, damping, score, next);
  return max_abs_diff(score, next);
}

RankingState solve_exact(const HeterogeneousGraph& graph, double damping, double tolerance,
                         std::size_t max_iterations) {
  if (!(damping >= 0.0 && damping < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "damping must lie in [0,1)");
  }
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be > 0");

  auto priors = graph.priors();
  std::vector<double> current(priors.begin(), priors.end());
  for (double& r : current) r *= (1.0 - damping);
  std::vector<double> next;
  double residual = 0.0;
  for (std::size_t it = 0; it <= max_iterations; ++it) {
    apply_operator(graph, damping, current, next);
    residual = max_abs_diff(current, next);
    if (residual < tolerance) {
      RankingState s;
      s.score = std::move(current);
      s.iterations = it;
      s.residual = residual;
      return s;
    }
    current.swap(next);
  }
  throw ConvergenceError("exact solver did not converge after " +
                             std::to_string(max_iterations) +
                             " iterations (residual " + std::to_string(residual) + ")",
                         residual);
}

RankingState solve_exact(const HeterogeneousGraph& graph, const SolverConfig& config) {
  return solve_exact(graph, config.damping, config.exact_tolerance, config.exact_max_iterations);
}

}  // namespace mrgrank
