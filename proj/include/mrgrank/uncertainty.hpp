#pragma once

#include <span>
#include <vector>

#include "mrgrank/exact.hpp"
#include "mrgrank/graph.hpp"

namespace mrgrank {

struct UncertaintyReport {
  std::vector<double> u;             // variance-mean ratio per item
  std::vector<double> u_normalized;  // min-max within the item's kind
  std::vector<char> zero_score;      // r_j == 0, u_j forced to 0
};

/// u_j = v_j / r_j. Items with a zero score get u_j = 0 and a flag.
/// Throws "invalid variance" on negative or non-finite variance.
UncertaintyReport compute_vmr(const RankingState& state, const Catalog& catalog);

/// Box-plot summary over values in [0,1]. The anchors are fixed at 0 and 1;
/// hinges are the 25% and 75% quantiles (linear interpolation between order
/// statistics); extremes are the most distant data values within 1.5 IQR of
/// the hinges (never inside them), clamped to [0,1].
struct BoxSummary {
  double min = 0.0;
  double lower_extreme = 0.0;
  double lower_hinge = 0.0;
  double upper_hinge = 0.0;
  double upper_extreme = 0.0;
  double max = 1.0;
};

BoxSummary summarize(std::span<const double> values);

/// Quantile of already sorted data, interpolating linearly at p*(n-1).
double sorted_quantile(std::span<const double> sorted, double p);

struct ClusterUncertainty {
  double value = 0.0;
  double score = 0.0;     // r_c
  double variance = 0.0;  // v_c
  bool zero_score = false;
};

/// sum_j (r_j / r_c) u_j over the members, equal to v_c / r_c.
ClusterUncertainty cluster_uncertainty(const UncertaintyReport& report,
                                       std::span<const Index> members,
                                       const RankingState& state);

/// m*_ij = d^2 m_ij^2 r_i / ((1 - d^2 m_jj) r_j).
double propagation_coefficient(double damping, double m_ij, double m_jj, double r_i, double r_j);

/// Item-to-item uncertainty propagation: coefficients m*_ij for every edge
/// i != j with m_ij > 0, and the flows u_{i->j} = m*_ij u_i.
class PropagationMatrix {
 public:
  PropagationMatrix() = default;
  PropagationMatrix(SparseMatrix coefficients, std::vector<double> u)
      : coefficients_(std::move(coefficients)), u_(std::move(u)) {}

  const SparseMatrix& coefficients() const { return coefficients_; }
  std::span<const double> u() const { return u_; }
  double coefficient(Index i, Index j) const { return coefficients_.at(i, j); }
  double flow(Index i, Index j) const { return coefficients_.at(i, j) * u_[i]; }

  /// || U M* - U ||_inf; the linear relation is only exact under the model,
  /// so this is reported rather than enforced.
  double markov_residual() const;

 private:
  SparseMatrix coefficients_;
  std::vector<double> u_;
};

/// Pairs whose target has a zero score carry no defined coefficient and are
/// left out. Throws "singular self-loop" if d^2 m_jj reaches 1.
PropagationMatrix propagation_matrix(const HeterogeneousGraph& graph, const RankingState& state,
                                     const UncertaintyReport& report, double damping);

/// u_{cs->ct} = sum_{j in ct} (r_j / r_ct) sum_{i in cs} u_{i->j}.
/// The clusters must be disjoint.
double cluster_propagation(const PropagationMatrix& pm, std::span<const Index> source,
                           std::span<const Index> target, const RankingState& state);

}  // namespace mrgrank
