#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrgrank/clustering.hpp"
#include "mrgrank/config.hpp"
#include "mrgrank/corpus.hpp"
#include "mrgrank/exact.hpp"
#include "mrgrank/flows.hpp"
#include "mrgrank/graph.hpp"
#include "mrgrank/incremental.hpp"
#include "mrgrank/layout.hpp"
#include "mrgrank/uncertainty.hpp"
#include "mrgrank/walks.hpp"

namespace mrgrank {

enum class SolveMethod { Exact, MonteCarlo };

std::string_view to_string(SolveMethod method);
std::optional<SolveMethod> parse_method(std::string_view text);

struct ScoreEdit {
  std::string item_id;
  std::optional<int> ui_score;
  std::optional<double> prior;
};

struct ItemDelta {
  std::string id;
  double old_score = 0.0;
  double new_score = 0.0;
  double old_u = 0.0;
  double new_u = 0.0;
};

struct EditResult {
  std::string item_id;
  int bucket = 0;
  double old_prior = 0.0;
  double new_prior = 0.0;
  bool noop = false;
  std::vector<std::string> affected;
  std::vector<ItemDelta> changes;
  UpdateStats stats;
};

struct FlowView {
  LayoutResult layout;
  std::vector<std::size_t> sources;         // positions in layout.clusters
  std::vector<std::vector<double>> values;  // per source, flow to every cluster
  std::vector<FlowTree> trees;
  BundleStats bundle;
};

/// One dataset with everything derived from it. Not synchronised; the service
/// wraps it in a reader/writer lock.
class Session {
 public:
  static Session build(EngineConfig config, Corpus corpus);

  static Session read(std::istream& in);
  static Session load(const std::string& path);
  void write(std::ostream& out) const;
  void save(const std::string& path) const;

  const EngineConfig& config() const { return config_; }
  const Corpus& corpus() const { return corpus_; }
  const HeterogeneousGraph& graph() const { return graph_; }
  const GraphBuildReport& build_report() const { return report_; }
  const Catalog& catalog() const { return graph_.catalog(); }

  void set_seed(std::uint64_t seed) { config_.solver.rng_seed = seed; }
  void set_walks_per_node(std::size_t walks) { config_.solver.walks_per_node = walks; }
  void set_edit_log(std::string path) { edit_log_ = std::move(path); }

  void solve(SolveMethod method);
  bool solved() const { return state_.has_value(); }
  std::optional<SolveMethod> method() const { return method_; }
  const RankingState& state() const;
  bool has_uncertainty() const { return uncertainty_.has_value(); }
  const UncertaintyReport& uncertainty() const;
  const WalkStore* walks() const { return walks_ ? &*walks_ : nullptr; }

  const ClusterModel& hierarchy(ItemKind kind) const {
    return hierarchies_[static_cast<std::size_t>(kind)];
  }
  const SparseMatrix& affinity(ItemKind kind) const {
    return affinities_[static_cast<std::size_t>(kind)];
  }
  std::vector<double> local_scores(ItemKind kind) const;
  std::size_t resolve_level(ItemKind kind, std::optional<std::size_t> level) const;

  EditResult edit(const ScoreEdit& edit);
  void renormalize();

  LayoutResult layout(ItemKind kind, std::size_t level) const;
  FlowView flows(const std::vector<std::string>& source_cluster_ids) const;

  nlohmann::json rankings_json(ItemKind kind, std::size_t top) const;
  nlohmann::json clusters_json(ItemKind kind, std::size_t level) const;
  nlohmann::json layout_json(ItemKind kind, std::size_t level) const;
  nlohmann::json propagation_json(const std::vector<std::string>& source_cluster_ids) const;
  nlohmann::json summary_json() const;
  std::string flows_svg(const std::vector<std::string>& source_cluster_ids) const;

 private:
  Session() = default;
  void derive();
  void refresh_uncertainty();
  std::uint64_t layout_seed(ItemKind kind) const;

  EngineConfig config_;
  Corpus corpus_;
  HeterogeneousGraph graph_;
  GraphBuildReport report_;
  std::array<SparseMatrix, kKindCount> affinities_;
  std::array<ClusterModel, kKindCount> hierarchies_;

  std::optional<SolveMethod> method_;
  std::optional<WalkStore> walks_;
  std::optional<RankingState> state_;
  std::optional<UncertaintyReport> uncertainty_;
  std::optional<PropagationMatrix> propagation_;
  std::string edit_log_;
};

}  // namespace mrgrank
