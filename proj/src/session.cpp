#include "mrgrank/session.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mrgrank/error.hpp"
#include "mrgrank/svg.hpp"

namespace mrgrank {

namespace {

constexpr char kMagic[8] = {'M', 'R', 'G', 'S', 'E', 'S', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t tag(const char (&s)[5]) {
  return static_cast<std::uint32_t>(s[0]) | static_cast<std::uint32_t>(s[1]) << 8 |
         static_cast<std::uint32_t>(s[2]) << 16 | static_cast<std::uint32_t>(s[3]) << 24;
}

template <class T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::string& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <class T>
  T get() {
    T v;
    need(sizeof v);
    std::memcpy(&v, data_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::vector<double> doubles() {
    const auto n = get<std::uint64_t>();
    if (n > (data_.size() - pos_) / sizeof(double)) throw Error(ErrorCode::Parse, "truncated session");
    std::vector<double> v(n);
    std::memcpy(v.data(), data_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::Parse, "truncated session");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json point(Vec2 p) { return nlohmann::json::array({p.x, p.y}); }

nlohmann::json polyline(const std::vector<Vec2>& pts) {
  nlohmann::json j = nlohmann::json::array();
  for (Vec2 p : pts) j.push_back(point(p));
  return j;
}

nlohmann::json summary(const BoxSummary& b) {
  return {{"min", b.min},
          {"lower_extreme", b.lower_extreme},
          {"lower_hinge", b.lower_hinge},
          {"upper_hinge", b.upper_hinge},
          {"upper_extreme", b.upper_extreme},
          {"max", b.max}};
}

}  // namespace

std::string_view to_string(SolveMethod method) {
  return method == SolveMethod::Exact ? "exact" : "mc";
}

std::optional<SolveMethod> parse_method(std::string_view text) {
  if (text == "exact") return SolveMethod::Exact;
  if (text == "mc") return SolveMethod::MonteCarlo;
  return std::nullopt;
}

Session Session::build(EngineConfig config, Corpus corpus) {
  config.validate();
  Session s;
  s.config_ = std::move(config);
  s.corpus_ = std::move(corpus);
  BuiltGraph built = build_graph(s.corpus_, s.config_);
  s.graph_ = std::move(built.graph);
  s.report_ = built.report;
  s.derive();
  return s;
}

void Session::derive() {
  for (ItemKind kind : kAllKinds) {
    const auto k = static_cast<std::size_t>(kind);
    affinities_[k] = graph_.symmetric_affinity(kind);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < catalog().count(kind); ++i) ids.push_back(catalog()[catalog().global(kind, i)].id);
    if (ids.empty()) {
      hierarchies_[k] = ClusterModel(kind, {}, {});
    } else {
      hierarchies_[k] = build_hierarchy(kind, std::move(ids), affinities_[k]);
    }
  }
}

void Session::refresh_uncertainty() {
  if (!state_ || !state_->has_variance) {
    uncertainty_.reset();
    propagation_.reset();
    return;
  }
  uncertainty_ = compute_vmr(*state_, catalog());
  state_->uncertainty = uncertainty_->u;
  state_->has_uncertainty = true;
  propagation_ = propagation_matrix(graph_, *state_, *uncertainty_, config_.solver.damping);
}

void Session::solve(SolveMethod method) {
  config_.solver.validate();
  if (method == SolveMethod::Exact) {
    state_ = solve_exact(graph_, config_.solver);
    walks_.reset();
  } else {
    walks_ = WalkStore::sample(graph_, config_.solver);
    state_ = scores_from_walks(*walks_, graph_.priors(), config_.solver);
  }
  method_ = method;
  refresh_uncertainty();
}

const RankingState& Session::state() const {
  if (!state_) throw Error(ErrorCode::InvalidState, "session has not been solved");
  return *state_;
}

const UncertaintyReport& Session::uncertainty() const {
  state();
  if (!uncertainty_) throw Error(ErrorCode::InvalidState, "uncertainty needs a Monte Carlo solve");
  return *uncertainty_;
}

std::vector<double> Session::local_scores(ItemKind kind) const {
  const auto& s = state().score;
  const auto first = s.begin() + static_cast<std::ptrdiff_t>(catalog().offset(kind));
  return {first, first + static_cast<std::ptrdiff_t>(catalog().count(kind))};
}

std::size_t Session::resolve_level(ItemKind kind, std::optional<std::size_t> level) const {
  const ClusterModel& h = hierarchy(kind);
  if (h.leaf_count() == 0) throw Error(ErrorCode::InvalidState, "no items of this kind");
  if (!level) return std::min(config_.clustering.default_level, h.max_level());
  if (*level > h.max_level()) {
    throw Error(ErrorCode::OutOfRange, "level must lie in [0, " + std::to_string(h.max_level()) + "]");
  }
  return *level;
}

EditResult Session::edit(const ScoreEdit& e) {
  const Index item = catalog().require(e.item_id);
  if (e.ui_score.has_value() == e.prior.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of ui_score or prior");
  }
  if (e.ui_score && (*e.ui_score < 1 || *e.ui_score > 10)) {
    throw Error(ErrorCode::OutOfRange, "ui_score must be an integer in [1, 10]");
  }
  if (e.prior && !(*e.prior > 0.0)) throw Error(ErrorCode::OutOfRange, "non-positive prior");
  if (!walks_) throw Error(ErrorCode::InvalidState, "score edits need a Monte Carlo solve");

  EditResult r;
  r.item_id = e.item_id;
  r.bucket = score_bucket(*state_, catalog(), item);
  r.old_prior = graph_.priors()[item];
  r.new_prior = e.prior ? *e.prior : prior_for_ui_score(r.old_prior, *e.ui_score, r.bucket);
  if ((e.ui_score && *e.ui_score == r.bucket) || r.new_prior == r.old_prior) {
    r.noop = true;
    r.new_prior = r.old_prior;
    return r;
  }

  const RankingState before = *state_;
  const std::vector<double> u_before = uncertainty_ ? uncertainty_->u : std::vector<double>{};
  const PriorEdit pe{e.item_id, r.new_prior};
  EditOutcome outcome = apply_prior_edits(graph_, *walks_, std::span(&pe, 1));
  state_ = scores_from_walks(*walks_, graph_.priors(), config_.solver);
  refresh_uncertainty();

  r.stats = outcome.stats;
  for (Index j : outcome.affected) {
    r.affected.push_back(catalog()[j].id);
    ItemDelta d;
    d.id = catalog()[j].id;
    d.old_score = before.score[j];
    d.new_score = state_->score[j];
    d.old_u = u_before.empty() ? 0.0 : u_before[j];
    d.new_u = uncertainty_ ? uncertainty_->u[j] : 0.0;
    r.changes.push_back(std::move(d));
  }
  if (!edit_log_.empty()) {
    std::ofstream log(edit_log_, std::ios::app);
    if (!log) throw Error(ErrorCode::Io, "cannot append to " + edit_log_);
    append_edit_log(log, {now_utc(), e.item_id, r.old_prior, r.new_prior});
  }
  return r;
}

void Session::renormalize() {
  if (walks_) {
    renormalize_priors(graph_, *walks_);
    state_ = scores_from_walks(*walks_, graph_.priors(), config_.solver);
  } else {
    std::vector<double> fresh = normalize_priors(catalog(), {graph_.priors().begin(), graph_.priors().end()});
    std::vector<Index> all(graph_.size());
    std::iota(all.begin(), all.end(), Index{0});
    const auto changes = graph_.plan_prior_change(fresh, all);
    graph_.commit_prior_change(std::move(fresh), changes);
    if (state_) state_ = solve_exact(graph_, config_.solver);
  }
  refresh_uncertainty();
}

std::uint64_t Session::layout_seed(ItemKind kind) const {
  return config_.solver.rng_seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(kind) + 1;
}

LayoutResult Session::layout(ItemKind kind, std::size_t level) const {
  const auto scores = local_scores(kind);
  return compute_layout(hierarchy(kind), level, scores, affinity(kind), config_.clustering,
                        config_.layout, layout_seed(kind));
}

FlowView Session::flows(const std::vector<std::string>& source_ids) const {
  if (source_ids.empty()) throw Error(ErrorCode::InvalidArgument, "at least one source cluster is required");
  std::vector<ClusterRef> refs;
  for (const auto& id : source_ids) refs.push_back(parse_cluster_id(id));
  for (const ClusterRef& r : refs) {
    if (r.kind != refs.front().kind || r.level != refs.front().level) {
      throw Error(ErrorCode::InvalidArgument, "source clusters must share kind and level");
    }
  }
  const ItemKind kind = refs.front().kind;
  const ClusterModel& h = hierarchy(kind);
  if (h.leaf_count() == 0 || refs.front().level > h.max_level()) {
    throw Error(ErrorCode::NotFound, "unknown cluster: " + source_ids.front());
  }
  const PropagationMatrix* pm = propagation_ ? &*propagation_ : nullptr;
  uncertainty();

  FlowView v;
  v.layout = layout(kind, refs.front().level);
  std::vector<std::vector<Index>> global(v.layout.clusters.size());
  std::vector<Vec2> centers;
  for (std::size_t c = 0; c < v.layout.clusters.size(); ++c) {
    for (Index m : v.layout.clusters[c].members) global[c].push_back(catalog().global(kind, m));
    centers.push_back(v.layout.clusters[c].center);
  }
  for (std::size_t s = 0; s < refs.size(); ++s) {
    auto it = std::find_if(v.layout.clusters.begin(), v.layout.clusters.end(),
                           [&](const ClusterLayout& cl) { return cl.node == refs[s].node; });
    if (it == v.layout.clusters.end()) throw Error(ErrorCode::NotFound, "unknown cluster: " + source_ids[s]);
    const auto src = static_cast<std::size_t>(it - v.layout.clusters.begin());
    if (std::find(v.sources.begin(), v.sources.end(), src) != v.sources.end()) {
      throw Error(ErrorCode::InvalidArgument, "duplicate source cluster: " + source_ids[s]);
    }
    std::vector<double> values(global.size(), 0.0);
    for (std::size_t c = 0; c < global.size(); ++c) {
      if (c != src) values[c] = cluster_propagation(*pm, global[src], global[c], *state_);
    }
    const auto targets = select_targets(src, values, centers, config_.flows.max_targets);
    v.trees.push_back(spiral_tree(src, centers[src], targets, config_.flows));
    v.sources.push_back(src);
    v.values.push_back(std::move(values));
  }
  v.bundle = bundle_flows(v.trees, config_.flows);
  return v;
}

nlohmann::json Session::rankings_json(ItemKind kind, std::size_t top) const {
  const RankingState& st = state();
  std::vector<Index> order(catalog().count(kind));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = catalog().global(kind, i);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return st.score[a] != st.score[b] ? st.score[a] > st.score[b] : catalog()[a].id < catalog()[b].id;
  });
  if (order.size() > top) order.resize(top);
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Index i = order[r];
    nlohmann::json it{{"rank", r + 1},
                      {"id", catalog()[i].id},
                      {"label", catalog()[i].label},
                      {"score", st.score[i]},
                      {"prior", graph_.priors()[i]}};
    if (uncertainty_) {
      it["variance"] = st.variance[i];
      it["u"] = uncertainty_->u[i];
      it["u_normalized"] = uncertainty_->u_normalized[i];
      it["zero_score"] = uncertainty_->zero_score[i] != 0;
    } else {
      it["variance"] = nullptr;
      it["u"] = nullptr;
      it["u_normalized"] = nullptr;
      it["zero_score"] = st.score[i] == 0.0;
    }
    items.push_back(std::move(it));
  }
  return {{"kind", to_string(kind)}, {"method", to_string(*method_)}, {"items", std::move(items)}};
}

nlohmann::json Session::clusters_json(ItemKind kind, std::size_t level) const {
  const RankingState& st = state();
  const ClusterModel& h = hierarchy(kind);
  const auto scores = local_scores(kind);
  nlohmann::json clusters = nlohmann::json::array();
  for (const Cluster& c : h.partition(level)) {
    std::vector<Index> global;
    for (Index m : c.members) global.push_back(catalog().global(kind, m));
    nlohmann::json members = nlohmann::json::array();
    std::vector<double> un;
    for (Index g : global) {
      nlohmann::json m{{"id", catalog()[g].id}, {"score", st.score[g]}};
      if (uncertainty_) {
        m["u"] = uncertainty_->u[g];
        m["u_normalized"] = uncertainty_->u_normalized[g];
        un.push_back(uncertainty_->u_normalized[g]);
      }
      members.push_back(std::move(m));
    }
    const auto reps = select_representatives(c.members, scores, h.ids(), affinity(kind),
                                             config_.clustering.representatives);
    nlohmann::json rep_ids = nlohmann::json::array();
    for (Index r : reps.items) rep_ids.push_back(h.ids()[r]);
    nlohmann::json cj{{"id", cluster_id(kind, level, c.node)},
                      {"size", c.members.size()},
                      {"members", std::move(members)},
                      {"representatives", std::move(rep_ids)}};
    if (uncertainty_) {
      const ClusterUncertainty cu = cluster_uncertainty(*uncertainty_, global, st);
      cj["score"] = cu.score;
      cj["variance"] = cu.variance;
      cj["uncertainty"] = cu.value;
      cj["summary"] = summary(summarize(un));
    } else {
      double total = 0.0;
      for (Index g : global) total += st.score[g];
      cj["score"] = total;
      cj["variance"] = nullptr;
      cj["uncertainty"] = nullptr;
      cj["summary"] = nullptr;
    }
    clusters.push_back(std::move(cj));
  }
  return {{"kind", to_string(kind)},
          {"level", level},
          {"max_level", h.max_level()},
          {"clusters", std::move(clusters)}};
}

nlohmann::json Session::layout_json(ItemKind kind, std::size_t level) const {
  std::vector<std::string> ids(hierarchy(kind).ids().begin(), hierarchy(kind).ids().end());
  return to_json(layout(kind, level), ids, local_scores(kind));
}

nlohmann::json Session::propagation_json(const std::vector<std::string>& source_ids) const {
  const FlowView v = flows(source_ids);
  const ItemKind kind = v.layout.kind;
  auto cid = [&](std::size_t c) { return cluster_id(kind, v.layout.level, v.layout.clusters[c].node); };
  nlohmann::json paths = nlohmann::json::array();
  nlohmann::json trees = nlohmann::json::array();
  for (const FlowTree& t : v.trees) {
    for (const FlowPath& p : flow_paths(t)) {
      paths.push_back({{"source", cid(p.source)},
                       {"target", cid(p.target)},
                       {"value", p.value},
                       {"points", polyline(p.points)},
                       {"segment_values", p.segment_values},
                       {"bundle_group", p.bundle_group}});
    }
    nlohmann::json nodes = nlohmann::json::array();
    for (const FlowTreeNode& n : t.nodes) {
      nodes.push_back({{"position", point(n.position)},
                       {"parent", n.parent == kNoNode ? nlohmann::json(nullptr) : nlohmann::json(n.parent)},
                       {"target", n.target ? nlohmann::json(cid(*n.target)) : nlohmann::json(nullptr)},
                       {"value", n.value},
                       {"edge", polyline(n.edge)},
                       {"bundle_group", n.group == kNoNode ? nlohmann::json(nullptr) : nlohmann::json(n.group)}});
    }
    trees.push_back({{"source", cid(t.source)}, {"nodes", std::move(nodes)}});
  }
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t s = 0; s < v.sources.size(); ++s) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t c = 0; c < v.values[s].size(); ++c) {
      if (v.values[s][c] > 0.0) row[cid(c)] = v.values[s][c];
    }
    values[cid(v.sources[s])] = std::move(row);
  }
  return {{"kind", to_string(kind)},
          {"level", v.layout.level},
          {"paths", std::move(paths)},
          {"trees", std::move(trees)},
          {"values", std::move(values)},
          {"bundle_groups", v.bundle.groups},
          {"compatible_pairs", v.bundle.compatible_pairs}};
}

nlohmann::json Session::summary_json() const {
  nlohmann::json counts = nlohmann::json::object();
  for (ItemKind k : kAllKinds) counts[std::string(to_string(k))] = catalog().count(k);
  nlohmann::json j{{"items", catalog().size()},
                   {"counts", std::move(counts)},
                   {"transitions", graph_.transition().nnz()},
                   {"solved", solved()},
                   {"method", method_ ? nlohmann::json(to_string(*method_)) : nlohmann::json(nullptr)},
                   {"seed", config_.solver.rng_seed}};
  if (walks_) {
    j["walks"] = walks_->walk_count();
    j["steps"] = walks_->step_count();
  }
  return j;
}

std::string Session::flows_svg(const std::vector<std::string>& source_ids) const {
  const FlowView v = flows(source_ids);
  std::vector<std::string> ids(hierarchy(v.layout.kind).ids().begin(), hierarchy(v.layout.kind).ids().end());
  return render_svg(v.layout, ids, local_scores(v.layout.kind), v.trees);
}

// --- persistence ---------------------------------------------------------

void Session::write(std::ostream& out) const {
  auto section = [&](const char (&name)[5], const std::string& body) {
    std::string head;
    put<std::uint32_t>(head, tag(name));
    put<std::uint64_t>(head, body.size());
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
  };
  out.write(kMagic, sizeof kMagic);
  std::string v;
  put<std::uint32_t>(v, kVersion);
  out.write(v.data(), static_cast<std::streamsize>(v.size()));

  section("CONF", to_json(config_).dump());
  std::ostringstream posts, users;
  write_posts_jsonl(posts, corpus_.posts);
  write_users_jsonl(users, corpus_.users);
  section("POST", posts.str());
  section("USER", users.str());
  std::string prio;
  put_doubles(prio, {graph_.priors().begin(), graph_.priors().end()});
  section("PRIO", prio);
  if (walks_) {
    std::ostringstream w;
    walks_->write_snapshot(w);
    section("WALK", w.str());
  }
  if (state_) {
    std::string s;
    put<std::uint8_t>(s, *method_ == SolveMethod::Exact ? 0 : 1);
    put_doubles(s, state_->score);
    put<std::uint8_t>(s, state_->has_variance ? 1 : 0);
    put_doubles(s, state_->variance);
    put<std::uint64_t>(s, state_->iterations);
    put<double>(s, state_->residual);
    section("STAT", s);
  }
  section("END ", {});
  if (!out) throw Error(ErrorCode::Io, "failed to write session");
}

Session Session::read(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::Parse, "not a session file");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kVersion) throw Error(ErrorCode::Parse, "unsupported session version");

  std::optional<std::string> conf, posts, users, prio, walk, stat;
  for (;;) {
    std::uint32_t t = 0;
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&t), sizeof t);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in) throw Error(ErrorCode::Parse, "truncated session");
    if (len > (std::uint64_t{1} << 40)) throw Error(ErrorCode::Parse, "corrupt session section");
    std::string body(len, '\0');
    in.read(body.data(), static_cast<std::streamsize>(len));
    if (!in) throw Error(ErrorCode::Parse, "truncated session");
    if (t == tag("END ")) break;
    if (t == tag("CONF")) conf = std::move(body);
    else if (t == tag("POST")) posts = std::move(body);
    else if (t == tag("USER")) users = std::move(body);
    else if (t == tag("PRIO")) prio = std::move(body);
    else if (t == tag("WALK")) walk = std::move(body);
    else if (t == tag("STAT")) stat = std::move(body);
  }
  if (!conf || !posts || !users || !prio) throw Error(ErrorCode::Parse, "session is missing sections");

  nlohmann::json cj;
  try {
    cj = nlohmann::json::parse(*conf);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad session config: ") + e.what());
  }
  Corpus corpus;
  std::istringstream ps(*posts), us(*users);
  corpus.posts = read_posts_jsonl(ps);
  corpus.users = read_users_jsonl(us);
  Session s = build(parse_config(cj), std::move(corpus));

  std::vector<double> priors = Reader(*prio).doubles();
  if (priors.size() != s.graph_.size()) throw Error(ErrorCode::Parse, "prior vector does not match the corpus");
  std::vector<Index> edited;
  for (Index i = 0; i < priors.size(); ++i) {
    if (priors[i] != s.graph_.priors()[i]) edited.push_back(i);
  }
  if (!edited.empty()) {
    const auto changes = s.graph_.plan_prior_change(priors, edited);
    s.graph_.commit_prior_change(std::move(priors), changes);
  }
  if (walk) {
    std::istringstream ws(*walk);
    s.walks_ = WalkStore::read_snapshot(ws);
    if (s.walks_->item_count() != s.graph_.size()) {
      throw Error(ErrorCode::Parse, "walk store does not match the corpus");
    }
  }
  if (stat) {
    Reader r(*stat);
    const auto m = r.get<std::uint8_t>();
    RankingState st;
    st.score = r.doubles();
    st.has_variance = r.get<std::uint8_t>() != 0;
    st.variance = r.doubles();
    st.iterations = r.get<std::uint64_t>();
    st.residual = r.get<double>();
    if (st.score.size() != s.graph_.size()) throw Error(ErrorCode::Parse, "ranking state does not match the corpus");
    s.method_ = m == 0 ? SolveMethod::Exact : SolveMethod::MonteCarlo;
    s.state_ = std::move(st);
    s.refresh_uncertainty();
  }
  return s;
}

Session Session::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path);
  return read(f);
}

void Session::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
  write(f);
}

}  // namespace mrgrank
