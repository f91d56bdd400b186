#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mrgrank/exact.hpp"
#include "mrgrank/graph.hpp"
#include "mrgrank/walks.hpp"

namespace mrgrank {

struct PriorEdit {
  std::string item_id;
  double new_prior = 0.0;
};

struct UpdateStats {
  std::size_t changed_transitions = 0;
  std::size_t touched_walks = 0;
  std::size_t touched_steps = 0;
  /// Total steps of every walk indexed under a changed transition; the work
  /// done never exceeds this.
  std::size_t indexed_steps = 0;
};

struct EditOutcome {
  std::vector<Index> affected;  // sorted global indices
  std::vector<TransitionChange> changes;
  UpdateStats stats;
};

/// Items whose visit row or column can change under `edits`: the edited items,
/// everything their own walks reach (their prior weights those visits), and
/// every start and visited item of a walk crossing a changed transition.
std::vector<Index> affected_set(const WalkStore& store, const HeterogeneousGraph& graph,
                                std::span<const PriorEdit> edits);

/// Applies raw (not renormalised) prior edits: updates the transition rows
/// whose destination prior changed and reweights only the stored walks that
/// cross a changed transition. Edges are never added or removed, so no walk is
/// resampled. The caller recomputes scores with scores_from_walks.
EditOutcome apply_prior_edits(HeterogeneousGraph& graph, WalkStore& store,
                              std::span<const PriorEdit> edits);

/// Rescales every kind's priors to sum to one. Transition rows are invariant
/// under a per-kind scale, so this normally reweights nothing.
EditOutcome renormalize_priors(HeterogeneousGraph& graph, WalkStore& store);

/// Decile of `item` among the items of its kind, ranked by ascending score
/// (ties by id): 1 for the bottom tenth, 10 for the top.
int score_bucket(const RankingState& state, const Catalog& catalog, Index item);

/// old_prior * 2^(ui_score - bucket), for ui_score in 1..10.
double prior_for_ui_score(double old_prior, int ui_score, int bucket);

struct EditLogEntry {
  std::string timestamp;
  std::string item_id;
  double old_prior = 0.0;
  double new_prior = 0.0;
};

void append_edit_log(std::ostream& out, const EditLogEntry& entry);
std::vector<EditLogEntry> read_edit_log(std::istream& in);

}  // namespace mrgrank
