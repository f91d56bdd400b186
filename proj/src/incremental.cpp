#include "mrgrank/incremental.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "mrgrank/error.hpp"

namespace mrgrank {

namespace {

struct EditPlan {
  std::vector<double> priors;
  std::vector<Index> edited;
  std::vector<TransitionChange> changes;
  std::vector<std::uint32_t> walks;
};

EditPlan plan(const WalkStore& store, const HeterogeneousGraph& graph,
              std::span<const PriorEdit> edits) {
  if (store.item_count() != graph.size()) {
    throw Error(ErrorCode::InvalidArgument, "graph does not match the walk store");
  }
  EditPlan p;
  p.priors.assign(graph.priors().begin(), graph.priors().end());
  std::set<Index> edited;
  for (const auto& e : edits) {
    const Index i = graph.catalog().require(e.item_id);
    if (!(e.new_prior > 0.0) || !std::isfinite(e.new_prior)) {
      throw Error(ErrorCode::InvalidArgument, "non-positive prior");
    }
    p.priors[i] = e.new_prior;
    edited.insert(i);
  }
  p.edited.assign(edited.begin(), edited.end());
  p.changes = graph.plan_prior_change(p.priors, p.edited);
  std::vector<std::uint32_t> walks;
  for (const auto& c : p.changes) {
    auto through = store.walks_through(c.from, c.to);
    walks.insert(walks.end(), through.begin(), through.end());
  }
  std::sort(walks.begin(), walks.end());
  walks.erase(std::unique(walks.begin(), walks.end()), walks.end());
  p.walks = std::move(walks);
  return p;
}

std::vector<Index> affected_from_plan(const WalkStore& store, const EditPlan& p) {
  std::set<Index> out;
  for (Index k : p.edited) {
    out.insert(k);
    for (Index j : store.visited_from(k)) out.insert(j);
  }
  for (std::uint32_t w : p.walks) {
    for (Index j : store.path(w)) out.insert(j);
  }
  return {out.begin(), out.end()};
}

}  // namespace

std::vector<Index> affected_set(const WalkStore& store, const HeterogeneousGraph& graph,
                                std::span<const PriorEdit> edits) {
  EditPlan p = plan(store, graph, edits);
  std::erase_if(p.edited, [&](Index k) { return p.priors[k] == graph.priors()[k]; });
  return affected_from_plan(store, p);
}

EditOutcome apply_prior_edits(HeterogeneousGraph& graph, WalkStore& store,
                              std::span<const PriorEdit> edits) {
  EditPlan p = plan(store, graph, edits);
  std::erase_if(p.edited, [&](Index k) { return p.priors[k] == graph.priors()[k]; });
  EditOutcome out;
  out.affected = affected_from_plan(store, p);
  for (std::uint32_t w : p.walks) out.stats.indexed_steps += store.path(w).size() - 1;
  graph.commit_prior_change(std::move(p.priors), p.changes);
  const auto rs = store.reweight(p.walks, graph);
  out.stats.changed_transitions = p.changes.size();
  out.stats.touched_walks = rs.walks;
  out.stats.touched_steps = rs.steps;
  out.changes = std::move(p.changes);
  return out;
}

EditOutcome renormalize_priors(HeterogeneousGraph& graph, WalkStore& store) {
  const std::vector<double> target =
      normalize_priors(graph.catalog(), {graph.priors().begin(), graph.priors().end()});
  std::vector<PriorEdit> edits;
  for (Index i = 0; i < graph.size(); ++i) {
    if (target[i] != graph.priors()[i] && target[i] > 0.0) {
      edits.push_back({graph.catalog()[i].id, target[i]});
    }
  }
  return apply_prior_edits(graph, store, edits);
}

int score_bucket(const RankingState& state, const Catalog& catalog, Index item) {
  const ItemKind kind = catalog.kind_of(item);
  const std::size_t begin = catalog.offset(kind), n = catalog.count(kind);
  const double s = state.score[item];
  std::size_t below = 0;
  for (std::size_t j = begin; j < begin + n; ++j) {
    const double t = state.score[j];
    if (t < s || (t == s && catalog[static_cast<Index>(j)].id < catalog[item].id)) ++below;
  }
  return 1 + static_cast<int>((10 * below) / n);
}

double prior_for_ui_score(double old_prior, int ui_score, int bucket) {
  if (ui_score < 1 || ui_score > 10) {
    throw Error(ErrorCode::OutOfRange, "ui score must be an integer in 1..10");
  }
  return old_prior * std::exp2(static_cast<double>(ui_score - bucket));
}

void append_edit_log(std::ostream& out, const EditLogEntry& e) {
  nlohmann::json j = {{"timestamp", e.timestamp},
                      {"item_id", e.item_id},
                      {"old", e.old_prior},
                      {"new", e.new_prior}};
  out << j.dump() << '\n';
  out.flush();
}

std::vector<EditLogEntry> read_edit_log(std::istream& in) {
  std::vector<EditLogEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      entries.push_back({j.at("timestamp").get<std::string>(), j.at("item_id").get<std::string>(),
                         j.at("old").get<double>(), j.at("new").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, std::string("edit log: ") + e.what());
    }
  }
  return entries;
}

}  // namespace mrgrank
