#include "mrgrank/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mrgrank/error.hpp"

namespace mrgrank {

UncertaintyReport compute_vmr(const RankingState& state, const Catalog& catalog) {
  if (!state.has_variance || state.variance.size() != state.score.size()) {
    throw Error(ErrorCode::InvalidState, "ranking state carries no variance");
  }
  if (state.score.size() != catalog.size()) {
    throw Error(ErrorCode::InvalidArgument, "ranking state does not match the catalog");
  }
  const std::size_t n = state.score.size();
  UncertaintyReport rep;
  rep.u.assign(n, 0.0);
  rep.u_normalized.assign(n, 0.0);
  rep.zero_score.assign(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const double v = state.variance[j];
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "invalid variance");
    if (state.score[j] > 0.0) {
      rep.u[j] = v / state.score[j];
    } else {
      rep.zero_score[j] = 1;
    }
  }
  for (ItemKind kind : kAllKinds) {
    const std::size_t begin = catalog.offset(kind), end = begin + catalog.count(kind);
    if (begin == end) continue;
    auto [lo, hi] = std::minmax_element(rep.u.begin() + static_cast<std::ptrdiff_t>(begin),
                                        rep.u.begin() + static_cast<std::ptrdiff_t>(end));
    const double span = *hi - *lo;
    for (std::size_t j = begin; j < end; ++j) {
      rep.u_normalized[j] = span > 0.0 ? (rep.u[j] - *lo) / span : 0.0;
    }
  }
  return rep;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty data");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxSummary summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "summary of empty cluster");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  BoxSummary b;
  b.lower_hinge = sorted_quantile(s, 0.25);
  b.upper_hinge = sorted_quantile(s, 0.75);
  const double iqr = b.upper_hinge - b.lower_hinge;
  const double lo_fence = b.lower_hinge - 1.5 * iqr, hi_fence = b.upper_hinge + 1.5 * iqr;
  b.lower_extreme = *std::find_if(s.begin(), s.end(), [&](double v) { return v >= lo_fence; });
  b.upper_extreme = *std::find_if(s.rbegin(), s.rend(), [&](double v) { return v <= hi_fence; });
  // Sparse data can leave no value between a hinge and its fence.
  b.lower_extreme = std::clamp(std::min(b.lower_extreme, b.lower_hinge), 0.0, 1.0);
  b.upper_extreme = std::clamp(std::max(b.upper_extreme, b.upper_hinge), 0.0, 1.0);
  return b;
}

ClusterUncertainty cluster_uncertainty(const UncertaintyReport& report,
                                       std::span<const Index> members,
                                       const RankingState& state) {
  if (members.empty()) throw Error(ErrorCode::InvalidArgument, "empty cluster");
  ClusterUncertainty c;
  for (Index j : members) {
    c.score += state.score[j];
    if (state.has_variance) c.variance += state.variance[j];
  }
  if (!(c.score > 0.0)) {
    c.zero_score = true;
    return c;
  }
  for (Index j : members) c.value += (state.score[j] / c.score) * report.u[j];
  return c;
}

double propagation_coefficient(double damping, double m_ij, double m_jj, double r_i, double r_j) {
  const double d2 = damping * damping;
  const double denom = 1.0 - d2 * m_jj;
  if (!(denom > 0.0)) throw Error(ErrorCode::Numeric, "singular self-loop");
  return d2 * m_ij * m_ij * r_i / (denom * r_j);
}

double PropagationMatrix::markov_residual() const {
  std::vector<double> um(u_.size(), 0.0);
  for (std::size_t i = 0; i < coefficients_.rows(); ++i) {
    auto idx = coefficients_.row_indices(i);
    auto vals = coefficients_.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) um[idx[k]] += u_[i] * vals[k];
  }
  double r = 0.0;
  for (std::size_t j = 0; j < u_.size(); ++j) r = std::max(r, std::abs(um[j] - u_[j]));
  return r;
}

PropagationMatrix propagation_matrix(const HeterogeneousGraph& graph, const RankingState& state,
                                     const UncertaintyReport& report, double damping) {
  const SparseMatrix& m = graph.transition();
  if (state.score.size() != m.rows() || report.u.size() != m.rows()) {
    throw Error(ErrorCode::InvalidArgument, "state does not match the graph");
  }
  std::vector<std::size_t> row_ptr(m.rows() + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto idx = m.row_indices(i);
    auto mv = m.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Index j = idx[k];
      if (j == i || !(mv[k] > 0.0) || !(state.score[j] > 0.0)) continue;
      cols.push_back(j);
      vals.push_back(propagation_coefficient(damping, mv[k], m.at(j, j), state.score[i],
                                             state.score[j]));
    }
    row_ptr[i + 1] = cols.size();
  }
  return PropagationMatrix(
      SparseMatrix::from_csr(m.rows(), m.cols(), std::move(row_ptr), std::move(cols), std::move(vals)),
      report.u);
}

double cluster_propagation(const PropagationMatrix& pm, std::span<const Index> source,
                           std::span<const Index> target, const RankingState& state) {
  std::set<Index> src(source.begin(), source.end());
  for (Index j : target) {
    if (src.count(j)) throw Error(ErrorCode::InvalidArgument, "clusters must be disjoint");
  }
  double r_target = 0.0;
  for (Index j : target) r_target += state.score[j];
  if (!(r_target > 0.0)) return 0.0;

  // Scatter rows of the source items once, then gather over the target.
  const SparseMatrix& c = pm.coefficients();
  std::vector<std::pair<Index, double>> into;  // (j, u_{i->j})
  for (Index i : source) {
    auto idx = c.row_indices(i);
    auto vals = c.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) into.emplace_back(idx[k], vals[k] * pm.u()[i]);
  }
  std::sort(into.begin(), into.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double total = 0.0;
  for (Index j : target) {
    auto it = std::lower_bound(into.begin(), into.end(), j,
                               [](const auto& e, Index key) { return e.first < key; });
    double from_source = 0.0;
    for (; it != into.end() && it->first == j; ++it) from_source += it->second;
    total += (state.score[j] / r_target) * from_source;
  }
  return total;
}

}  // namespace mrgrank
