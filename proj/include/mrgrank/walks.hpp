#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "mrgrank/config.hpp"
#include "mrgrank/exact.hpp"
#include "mrgrank/graph.hpp"

namespace mrgrank {

/// The persisted set of terminating random walks together with the per-pair
/// visit statistics derived from them.
///
/// Walk w starts at item w / walks_per_node(). Each step remembers the
/// transition probability it was sampled under and a weight factor equal to
/// the ratio of the current probability to that sampled one. A visit made
/// after k steps counts with the product of the first k factors, so z stays an
/// unbiased estimate of the visit expectation under the current transitions.
class WalkStore {
 public:
  static constexpr std::uint32_t kSnapshotVersion = 1;

  WalkStore() = default;

  static WalkStore sample(const HeterogeneousGraph& graph, const SolverConfig& config);

  std::size_t item_count() const { return item_count_; }
  std::size_t walks_per_node() const { return walks_per_node_; }
  std::size_t walk_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t step_count() const { return sampled_.size(); }
  double damping() const { return damping_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t max_walk_length() const { return max_walk_length_; }

  Index start(std::size_t walk) const { return static_cast<Index>(walk / walks_per_node_); }
  std::span<const Index> path(std::size_t walk) const {
    return {nodes_.data() + offsets_[walk], nodes_.data() + offsets_[walk + 1]};
  }
  std::span<const double> sampled_probability(std::size_t walk) const {
    return {sampled_.data() + step_offset(walk), path(walk).size() - 1};
  }
  std::span<const double> step_factor(std::size_t walk) const {
    return {factor_.data() + step_offset(walk), path(walk).size() - 1};
  }

  /// True when every walk from `from` is the bare start visit because the
  /// start had no outgoing mass when sampled.
  bool deterministic_start(Index from) const { return dangling_start_[from] != 0; }

  /// z: mean (weighted) number of visits to `to` by a walk started at `from`.
  double visit_mean(Index from, Index to) const;
  /// Variance of a single walk's visit count under the chosen model.
  double visit_variance(Index from, Index to, VarianceModel model) const;

  /// Calls fn(to, mean, variance) for every item visited from `from`, in
  /// increasing item order.
  template <class Fn>
  void for_each_visit(Index from, VarianceModel model, Fn&& fn) const {
    for (std::size_t k = visit_ptr_[from]; k < visit_ptr_[from + 1]; ++k) {
      fn(visit_item_[k], mean_at(k), variance_at(from, k, model));
    }
  }
  std::span<const Index> visited_from(Index from) const {
    return {visit_item_.data() + visit_ptr_[from], visit_item_.data() + visit_ptr_[from + 1]};
  }

  /// Walks that traverse the transition from -> to, ascending, without repeats.
  std::span<const std::uint32_t> walks_through(Index from, Index to) const;
  std::size_t indexed_edge_count() const { return index_.size(); }

  struct ReweightStats {
    std::size_t walks = 0;
    std::size_t steps = 0;
  };

  /// Recomputes the step factors of `walks` against the current transitions of
  /// `graph` and patches the visit statistics of their start items in place.
  /// Cost is linear in the length of the listed walks.
  ReweightStats reweight(std::span<const std::uint32_t> walks, const HeterogeneousGraph& graph);

  void write_snapshot(std::ostream& out) const;
  static WalkStore read_snapshot(std::istream& in);

 private:
  std::size_t step_offset(std::size_t walk) const { return offsets_[walk] - walk; }
  double mean_at(std::size_t k) const {
    return visit_sum_[k] / static_cast<double>(walks_per_node_);
  }
  double variance_at(Index from, std::size_t k, VarianceModel model) const;
  std::size_t visit_slot(Index from, Index to) const;  // SIZE_MAX when absent

  /// (item, weighted visit count) of one walk, sorted by item.
  void contributions(std::size_t walk, std::span<const double> factors,
                     std::vector<std::pair<Index, double>>& out) const;
  void rebuild_statistics();
  void rebuild_index();

  std::size_t item_count_ = 0;
  std::size_t walks_per_node_ = 0;
  std::size_t max_walk_length_ = 0;
  double damping_ = 0.0;
  std::uint64_t seed_ = 0;

  std::vector<std::size_t> offsets_;  // walk -> range in nodes_
  std::vector<Index> nodes_;
  std::vector<double> sampled_;       // per step
  std::vector<double> factor_;        // per step
  std::vector<std::uint8_t> dangling_start_;

  std::vector<std::size_t> visit_ptr_;
  std::vector<Index> visit_item_;
  std::vector<double> visit_sum_;
  std::vector<double> visit_sumsq_;

  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> index_;
};

/// r_j = (1-d) sum_i w_i z_ij and v_j = (1-d)^2 sum_i w_i^2 v_z,ij.
RankingState scores_from_walks(const WalkStore& store, std::span<const double> priors,
                               const SolverConfig& config);

}  // namespace mrgrank
