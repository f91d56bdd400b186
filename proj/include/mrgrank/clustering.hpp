#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrgrank/corpus.hpp"
#include "mrgrank/sparse.hpp"

namespace mrgrank {

// Everything in this module works on local indices within one item kind.

struct Merge {
  std::size_t left = 0;   // node ids: leaves are 0..n-1, merge m creates node n+m
  std::size_t right = 0;
  double affinity = 0.0;  // average linkage at the time of the merge
  std::size_t size = 0;
};

struct Cluster {
  std::size_t node = 0;
  std::vector<Index> members;  // ascending local indices
};

/// Binary agglomerative hierarchy over the items of one kind. Level L is the
/// partition obtained by undoing the last L merges, so level 0 is a single
/// cluster and level n-1 is all singletons.
class ClusterModel {
 public:
  ClusterModel() = default;
  ClusterModel(ItemKind kind, std::vector<std::string> ids, std::vector<Merge> merges);

  ItemKind kind() const { return kind_; }
  std::size_t leaf_count() const { return ids_.size(); }
  std::size_t max_level() const { return ids_.empty() ? 0 : ids_.size() - 1; }
  std::size_t depth() const;
  std::size_t root() const { return ids_.size() <= 1 ? 0 : 2 * ids_.size() - 2; }
  const std::vector<Merge>& merges() const { return merges_; }
  std::span<const std::string> ids() const { return ids_; }

  std::vector<Index> members(std::size_t node) const;
  std::vector<Cluster> partition(std::size_t level) const;

  /// Nested {"node","affinity","members","children"} tree with item ids.
  nlohmann::json tree_json() const;

 private:
  ItemKind kind_ = ItemKind::Hashtag;
  std::vector<std::string> ids_;
  std::vector<Merge> merges_;
};

/// Deterministic average-linkage clustering on a symmetric affinity matrix:
/// repeatedly merges the pair of clusters with the highest mean pairwise
/// affinity. Ties go to the pair whose smallest member ids sort first.
ClusterModel build_hierarchy(ItemKind kind, std::vector<std::string> ids,
                             const SparseMatrix& affinity);

struct Representatives {
  std::vector<Index> items;          // top-k members by score, ties by id
  std::vector<std::size_t> assigned; // per cluster member: position in `items`
};

/// Members are assigned to the representative they have the highest affinity
/// with; ties, including the all-zero case, go to the higher-ranked one.
Representatives select_representatives(std::span<const Index> members,
                                       std::span<const double> scores,
                                       std::span<const std::string> ids,
                                       const SparseMatrix& affinity, std::size_t k);

struct ClusterEdge {
  std::size_t a = 0;  // a < b, positions in the partition
  std::size_t b = 0;
  std::size_t connections = 0;
};

struct ClusterGraph {
  std::size_t cluster_count = 0;
  std::vector<ClusterEdge> edges;  // sorted by (a, b)

  bool has_edge(std::size_t a, std::size_t b) const;
};

/// Counts item pairs {i, j} with nonzero affinity in either direction that
/// straddle two clusters; an edge exists when the count reaches `threshold`.
/// Cluster ids look like "hashtag:4:57" (kind, level, tree node).
std::string cluster_id(ItemKind kind, std::size_t level, std::size_t node);

struct ClusterRef {
  ItemKind kind = ItemKind::Hashtag;
  std::size_t level = 0;
  std::size_t node = 0;
};

/// Throws Parse on malformed ids.
ClusterRef parse_cluster_id(const std::string& id);

ClusterGraph build_cluster_graph(const std::vector<Cluster>& partition,
                                 const SparseMatrix& affinity, std::size_t threshold);

}  // namespace mrgrank
