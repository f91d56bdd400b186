#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mrgrank/config.hpp"
#include "mrgrank/corpus.hpp"
#include "mrgrank/sparse.hpp"

namespace mrgrank {

struct Item {
  std::string id;
  ItemKind kind = ItemKind::Post;
  std::string label;
};

/// All items of a dataset, grouped by kind (posts, then users, then hashtags).
/// Global indices run over the whole catalog; local indices count within one kind.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<Item> items);

  std::size_t size() const { return items_.size(); }
  const Item& operator[](Index i) const { return items_[i]; }
  std::span<const Item> items() const { return items_; }

  std::optional<Index> find(std::string_view id) const;
  Index require(std::string_view id) const;

  std::size_t offset(ItemKind kind) const { return offsets_[static_cast<std::size_t>(kind)]; }
  std::size_t count(ItemKind kind) const {
    const auto k = static_cast<std::size_t>(kind);
    return offsets_[k + 1] - offsets_[k];
  }
  ItemKind kind_of(Index i) const { return items_[i].kind; }
  Index global(ItemKind kind, std::size_t local) const {
    return static_cast<Index>(offset(kind) + local);
  }
  std::size_t local(Index i) const { return i - offset(kind_of(i)); }

 private:
  std::vector<Item> items_;
  std::array<std::size_t, kKindCount + 1> offsets_{};
  std::unordered_map<std::string, Index> by_id_;
};

/// blocks[from][to] has one row per `from` item and one column per `to` item,
/// both in local indices.
struct AffinityBlocks {
  std::array<std::array<SparseMatrix, kKindCount>, kKindCount> blocks;
  MixingWeights alpha = MixingWeights::defaults();

  const SparseMatrix& at(ItemKind from, ItemKind to) const {
    return blocks[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }
  SparseMatrix& at(ItemKind from, ItemKind to) {
    return blocks[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }

  /// Empty blocks of the right shape for `catalog`.
  static AffinityBlocks empty(const Catalog& catalog);
};

/// Scales each kind's sub-vector to sum to one. A kind whose entries are all
/// zero becomes uniform.
std::vector<double> normalize_priors(const Catalog& catalog, std::vector<double> raw);

struct TransitionChange {
  Index from;
  Index to;
  double old_value;
  double new_value;
};

/// The assembled mutual-reinforcement graph. Row i of transition() holds the
/// probabilities of stepping from item i to each neighbour; rows sum to one
/// except for dangling items, whose rows are empty.
class HeterogeneousGraph {
 public:
  HeterogeneousGraph() = default;

  /// Mixes the affinity blocks with their alpha weights and folds in the
  /// destination priors. Within each target kind, entry (i,j) is proportional
  /// to affinity(i,j) * prior(j); the per-kind shares are weighted by alpha and
  /// the whole row renormalised over the kinds that row actually reaches.
  static HeterogeneousGraph assemble(Catalog catalog, AffinityBlocks blocks,
                                     std::vector<double> priors);

  const Catalog& catalog() const { return catalog_; }
  const AffinityBlocks& blocks() const { return blocks_; }
  std::span<const double> priors() const { return priors_; }
  const SparseMatrix& transition() const { return transition_; }
  std::size_t size() const { return catalog_.size(); }

  double transition_prob(Index from, Index to) const { return transition_.at(from, to); }
  /// No outgoing probability mass: no edges, or only edges the mixing weights
  /// or zero priors switch off.
  bool is_dangling(Index i) const { return transition_.row_sum(i) == 0.0; }

  /// Items with a structural edge into `j` (independent of priors).
  std::span<const Index> predecessors(Index j) const { return incoming_.row_indices(j); }

  /// Within-kind affinity, symmetrised: max(A, A^T) entry-wise on the pattern
  /// union. Used for clustering and layout.
  SparseMatrix symmetric_affinity(ItemKind kind) const;

  /// Transition entries that would change if the priors became `new_priors`,
  /// given that only the items in `edited` differ from the current priors.
  std::vector<TransitionChange> plan_prior_change(std::span<const double> new_priors,
                                                  std::span<const Index> edited) const;

  /// Installs new priors together with the changes computed by plan_prior_change.
  void commit_prior_change(std::vector<double> new_priors,
                           std::span<const TransitionChange> changes);

 private:
  void compute_row(Index i, std::span<const double> priors, std::span<double> out) const;

  Catalog catalog_;
  AffinityBlocks blocks_;
  std::vector<double> priors_;
  SparseMatrix raw_;        // structural affinities, global indices
  SparseMatrix transition_; // same pattern as raw_
  SparseMatrix incoming_;   // pattern transpose of raw_
};

// --- Building blocks from a corpus -------------------------------------------

struct TermStats {
  std::size_t documents = 0;
  std::unordered_map<std::string, std::size_t> document_frequency;

  static TermStats from_documents(const std::vector<std::vector<std::string>>& docs);
  /// Smoothed inverse document frequency ln((1+N)/(1+df)) + 1; never zero.
  double idf(const std::string& term) const;
};

/// Cosine similarity of TF-IDF vectors (raw term counts times idf). Pairs at
/// or below the threshold are dropped; each post keeps its top_k strongest
/// neighbours and a pair survives if either endpoint keeps it, so the result
/// stays symmetric. Diagonal is zero.
SparseMatrix build_post_graph(const std::vector<std::vector<std::string>>& post_tokens,
                              const TermStats& vocab, const SimilarityParams& params);

struct UserGraph {
  SparseMatrix follows;  // follows(i,j) = 1 iff user i follows user j
  std::size_t unresolved = 0;
};
UserGraph build_user_graph(const std::vector<UserRecord>& users);

/// Co-occurrence counts; `post_tags` lists local hashtag indices per post.
SparseMatrix build_hashtag_graph(const std::vector<std::vector<Index>>& post_tags,
                                 std::size_t hashtag_count);

struct CrossLinks {
  SparseMatrix post_user, user_post;
  SparseMatrix post_hashtag, hashtag_post;
  SparseMatrix user_hashtag, hashtag_user;
};
CrossLinks build_cross_links(const std::vector<Index>& post_author,
                             const std::vector<std::vector<Index>>& post_tags,
                             std::size_t user_count, std::size_t hashtag_count);

struct GraphBuildReport {
  std::size_t unresolved_followers = 0;
  std::size_t empty_posts = 0;
};

struct BuiltGraph {
  HeterogeneousGraph graph;
  GraphBuildReport report;
};

/// Full ingest: catalog, blocks, priors (1 + retweets / followers / usage,
/// normalised per kind) and assembly.
BuiltGraph build_graph(const Corpus& corpus, const EngineConfig& config);

}  // namespace mrgrank
