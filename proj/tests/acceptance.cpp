// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrgrank/config.hpp"
#include "mrgrank/corpus.hpp"
#include "mrgrank/exact.hpp"
#include "mrgrank/flows.hpp"
#include "mrgrank/geometry.hpp"
#include "mrgrank/incremental.hpp"
#include "mrgrank/layout.hpp"
#include "mrgrank/session.hpp"
#include "mrgrank/uncertainty.hpp"
#include "mrgrank/walks.hpp"
#include "oracles.hpp"

using namespace mrgrank;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SolverConfig solver(std::size_t walks, std::uint64_t seed) {
  SolverConfig c;
  c.walks_per_node = walks;
  c.rng_seed = seed;
  c.damping = 0.85;
  return c;
}

Outcome oracle_equivalence() {
  gen::Rng rng(20240);
  double worst_rho = 1.0, worst_err = 0.0, worst_time = 0.0;
  std::size_t largest = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto shape = gen::random_shape(rng, 40, 150);
    shape.dangling_fraction = 0.05;
    const auto g = gen::random_graph(rng, shape);
    largest = std::max(largest, g.size());
    const auto exact = solve_exact(g, 0.85, 1e-13, 100000);

    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = solver(2000, rng.next());
    const auto mc = scores_from_walks(WalkStore::sample(g, cfg), g.priors(), cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return exact.score[a] > exact.score[b]; });
    const std::size_t top = std::min<std::size_t>(20, order.size());
    double err = 0.0;
    for (std::size_t k = 0; k < top; ++k) {
      const auto j = order[k];
      err += std::abs(mc.score[j] - exact.score[j]) / exact.score[j];
    }
    err /= static_cast<double>(top);

    worst_rho = std::min(worst_rho, oracle::spearman(mc.score, exact.score));
    worst_err = std::max(worst_err, err);
    worst_time = std::max(worst_time, secs);
  }
  return {worst_rho >= 0.95 && worst_err < 0.05 && worst_time < 10.0,
          "20 graphs up to " + std::to_string(largest) + " items, min spearman " + fmt("%.4f", worst_rho) +
              ", max top-20 rel err " + fmt("%.4f", worst_err) + ", max " + fmt("%.2f", worst_time) + " s"};
}

Outcome geometric_series() {
  const auto g = gen::graph_from_edges({ItemKind::Post}, {{0, 0, 1.0}}, {1.0});
  const auto cfg = solver(100000, 77);
  const auto r = scores_from_walks(WalkStore::sample(g, cfg), g.priors(), cfg);
  const double rel = std::abs(r.score[0] - g.priors()[0]) / g.priors()[0];
  return {rel < 0.02, "r = " + fmt("%.5f", r.score[0]) + ", w = 1, rel err " + fmt("%.5f", rel)};
}

Outcome incremental_equals_full() {
  gen::Rng rng(4242);
  double worst = 0.0;
  std::size_t touched = 0, total = 0;
  bool sparse = true;
  for (int trial = 0; trial < 20; ++trial) {
    auto shape = gen::random_shape(rng, 40, 150);
    shape.dangling_fraction = 0.05;
    auto g = gen::random_graph(rng, shape);
    const auto cfg = solver(200, rng.next());
    auto store = WalkStore::sample(g, cfg);
    std::vector<PriorEdit> edits;
    const std::size_t count = 1 + rng.below(5);
    for (std::size_t k = 0; k < count; ++k) {
      const Index i = static_cast<Index>(rng.below(g.size()));
      edits.push_back({g.catalog()[i].id, g.priors()[i] * std::exp2(rng.uniform(-3.0, 3.0))});
    }
    const auto out = apply_prior_edits(g, store, edits);
    const auto inc = scores_from_walks(store, g.priors(), cfg);
    const auto full = oracle::reweighted_scores(store, g);
    for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, std::abs(inc.score[j] - full[j]));
    sparse = sparse && out.stats.touched_steps < store.step_count();
    touched += out.stats.touched_steps;
    total += store.step_count();
  }
  return {worst <= 1e-9 && sparse, "20 workloads of 1-5 edits, max |diff| " + fmt("%.2e", worst) + ", touched " +
                                       std::to_string(touched) + " of " + std::to_string(total) + " steps"};
}

Outcome uncertainty_identities() {
  gen::Rng rng(777);
  const double d = 0.85, d2 = d * d;
  double cluster_err = 0.0, coeff_err = 0.0, prop_err = 0.0;
  std::size_t instances = 0;
  for (int trial = 0; trial < 60; ++trial) {
    auto shape = gen::random_shape(rng, 3, 7);
    shape.dangling_fraction = 0.1;
    const auto g = gen::random_graph(rng, shape);
    const auto cfg = solver(100, rng.next());
    const auto st = scores_from_walks(WalkStore::sample(g, cfg), g.priors(), cfg);
    const auto rep = compute_vmr(st, g.catalog());
    const auto pm = propagation_matrix(g, st, rep, d);
    const std::size_t n = g.size();

    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double mij = g.transition_prob(i, j);
        if (i == j || mij <= 0.0 || st.score[j] <= 0.0) continue;
        const double want = d2 * mij * mij * st.score[i] / ((1.0 - d2 * g.transition_prob(j, j)) * st.score[j]);
        coeff_err = std::max(coeff_err, std::abs(pm.coefficient(i, j) - want) / std::max(1.0, want));
      }
    }

    // Every assignment of items to source, target or neither.
    std::size_t combos = 1;
    for (std::size_t k = 0; k < n; ++k) combos *= 3;
    for (std::size_t code = 0; code < combos; ++code) {
      std::vector<Index> src, tgt;
      std::size_t c = code;
      for (Index k = 0; k < n; ++k, c /= 3) {
        if (c % 3 == 1) src.push_back(k);
        if (c % 3 == 2) tgt.push_back(k);
      }
      if (!src.empty()) {
        const auto cu = cluster_uncertainty(rep, src, st);
        double sv = 0.0, sr = 0.0;
        for (Index j : src) {
          sv += st.variance[j];
          sr += st.score[j];
        }
        if (sr > 0.0) cluster_err = std::max(cluster_err, std::abs(cu.value - sv / sr));
      }
      if (src.empty() || tgt.empty()) continue;
      double rc = 0.0;
      for (Index j : tgt) rc += st.score[j];
      double brute = 0.0;
      for (Index j : tgt) {
        for (Index i : src) {
          const double mij = g.transition_prob(i, j);
          if (mij <= 0.0 || st.score[j] <= 0.0) continue;
          const double mstar = d2 * mij * mij * st.score[i] / ((1.0 - d2 * g.transition_prob(j, j)) * st.score[j]);
          brute += (st.score[j] / rc) * mstar * rep.u[i];
        }
      }
      prop_err = std::max(prop_err, std::abs(cluster_propagation(pm, src, tgt, st) - (rc > 0.0 ? brute : 0.0)));
      ++instances;
    }
  }
  return {cluster_err <= 1e-12 && coeff_err <= 1e-12 && prop_err <= 1e-12,
          "cluster " + fmt("%.1e", cluster_err) + ", coefficient " + fmt("%.1e", coeff_err) + ", propagation " +
              fmt("%.1e", prop_err) + " over " + std::to_string(instances) + " source/target pairs"};
}

Outcome geometry_properties() {
  gen::Rng rng(9001);
  std::size_t wrong = 0;
  {
    const Box box{0, 0, 1, 1};
    std::vector<Vec2> sites;
    for (int i = 0; i < 10; ++i) sites.push_back({rng.uniform(), rng.uniform()});
    const auto cells = voronoi_cells(sites, box);
    for (int k = 0; k < 10000; ++k) {
      const Vec2 p{rng.uniform(), rng.uniform()};
      std::size_t want = 0;
      for (std::size_t s = 1; s < sites.size(); ++s) {
        if (distance(sites[s], p) < distance(sites[want], p)) want = s;
      }
      if (!oracle::point_in_polygon(cells[want], p)) ++wrong;
    }
  }

  std::size_t outside = 0, placed = 0;
  LayoutParams lp;
  for (int instance = 0; instance < 50; ++instance) {
    std::vector<Vec2> sites;
    const std::size_t n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) sites.push_back({rng.uniform(), rng.uniform()});
    for (const auto& cell : voronoi_cells(sites, {})) {
      for (const Vec2& p : layout_representatives(cell, 1 + rng.below(12), lp, rng.next())) {
        ++placed;
        if (!oracle::point_in_polygon(cell, p)) ++outside;
      }
    }
  }

  std::size_t compat_bad = 0;
  for (int k = 0; k < 2000; ++k) {
    const Vec2 p0{rng.uniform(), rng.uniform()}, p1{rng.uniform(), rng.uniform()};
    const Vec2 q0{rng.uniform(), rng.uniform()}, q1{rng.uniform(), rng.uniform()};
    const auto a = compatibility(p0, p1, q0, q1);
    const auto b = compatibility(q0, q1, p0, p1);
    const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x)); };
    const bool ok = close(a.angle, b.angle) && close(a.scale, b.scale) && close(a.position, b.position) &&
                    close(a.total, b.total) && a.angle >= 0.0 && a.angle <= 1.0 + 1e-15 && a.position > 0.0 &&
                    a.position <= 1.0 && a.scale > 0.0;
    if (!ok) ++compat_bad;
  }

  double conservation = 0.0;
  FlowParams fp;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 root{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
    std::vector<FlowTarget> targets;
    const std::size_t n = 1 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 p;
      do {
        p = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
      } while (distance(p, root) < 0.05);
      targets.push_back({i + 1, p, rng.uniform(0.01, 1.0)});
    }
    const auto tree = spiral_tree(0, root, targets, fp);
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      double sum = tree.nodes[k].own_value;
      for (std::size_t c : tree.children(k)) sum += tree.nodes[c].value;
      conservation = std::max(conservation, std::abs(tree.nodes[k].value - sum));
    }
    double total = 0.0;
    for (const auto& t : targets) total += t.value;
    conservation = std::max(conservation, std::abs(tree.nodes[0].value - total));
  }

  return {wrong == 0 && outside == 0 && compat_bad == 0 && conservation <= 1e-9,
          "voronoi " + std::to_string(wrong) + "/10000 misclassified, " + std::to_string(outside) + "/" +
              std::to_string(placed) + " representatives outside, " + std::to_string(compat_bad) +
              "/2000 compatibility violations, conservation " + fmt("%.1e", conservation)};
}

Outcome planted_salience() {
  const std::string dir = std::string(MRGRANK_DATA_DIR) + "/synthetic/";
  auto session = Session::build(load_config(dir + "config.json"),
                                load_corpus(dir + "posts.jsonl", dir + "users.jsonl"));
  session.solve(SolveMethod::MonteCarlo);
  std::ifstream in(dir + "planted.json");
  const auto planted = nlohmann::json::parse(in);
  bool pass = true;
  std::string detail;
  for (ItemKind kind : kAllKinds) {
    const std::string name(to_string(kind));
    std::set<std::string> want;
    for (const auto& id : planted.at(name)) want.insert(id.get<std::string>());
    std::size_t hits = 0;
    const auto top = session.rankings_json(kind, 10);
    for (const auto& item : top["items"]) hits += want.count(item["id"].get<std::string>());
    pass = pass && hits >= 8;
    detail += (detail.empty() ? "" : ", ") + name + " " + std::to_string(hits) + "/10";
  }
  return {pass, detail};
}

Outcome determinism() {
  const std::string dir = std::string(MRGRANK_DATA_DIR) + "/synthetic/";
  const auto run = [&](unsigned threads) {
    auto config = load_config(dir + "config.json");
    config.solver.walks_per_node = 200;
    config.solver.threads = threads;
    auto s = Session::build(config, load_corpus(dir + "posts.jsonl", dir + "users.jsonl"));
    s.solve(SolveMethod::MonteCarlo);
    std::ostringstream walks;
    s.walks()->write_snapshot(walks);
    std::string layout;
    for (ItemKind kind : kAllKinds) layout += s.layout_json(kind, s.resolve_level(kind, std::nullopt)).dump();
    return std::pair{walks.str(), layout};
  };
  const auto a = run(0), b = run(0), c = run(1);
  const bool walks_same = a.first == b.first && a.first == c.first;
  const bool layout_same = a.second == b.second && a.second == c.second;
  return {walks_same && layout_same, "walk snapshot " + std::to_string(a.first.size()) + " bytes " +
                                         (walks_same ? "identical" : "differs") + ", layout json " +
                                         std::to_string(a.second.size()) + " bytes " +
                                         (layout_same ? "identical" : "differs") + " (3 runs, 1 and N threads)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle-equivalence", oracle_equivalence},
      {"geometric-series", geometric_series},
      {"incremental-equals-full", incremental_equals_full},
      {"uncertainty-identities", uncertainty_identities},
      {"geometry-properties", geometry_properties},
      {"planted-salience", planted_salience},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %-24s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
