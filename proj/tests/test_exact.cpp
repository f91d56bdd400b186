#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mrgrank/error.hpp"
#include "mrgrank/exact.hpp"
#include "oracles.hpp"

using namespace mrgrank;

TEST_CASE("single dangling item keeps (1-d) of its prior") {
  const auto g = gen::graph_from_edges({ItemKind::Post}, {}, {1.0});
  const auto r = solve_exact(g, 0.85, 1e-12, 100);
  CHECK(r.score[0] == doctest::Approx(0.15).epsilon(1e-15));
  CHECK_FALSE(r.has_variance);
  CHECK_FALSE(r.has_uncertainty);
}

TEST_CASE("zero damping returns the priors") {
  gen::Rng rng(5);
  const auto g = gen::random_graph(rng, gen::random_shape(rng, 5, 40));
  const auto r = solve_exact(g, 0.0, 1e-12, 100);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(r.score[i] == g.priors()[i]);
}

TEST_CASE("two node symmetric graph") {
  const auto g = gen::graph_from_edges({ItemKind::Post, ItemKind::Post}, {{0, 1, 1.0}, {1, 0, 1.0}}, {0.5, 0.5});
  const auto r = solve_exact(g, 0.85, 1e-14, 1000);
  const auto o = oracle::exact_scores(g, 0.85);
  CHECK(r.score[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.score[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(o[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("property: the fixed point residual is below tolerance and matches elimination") {
  gen::Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    auto shape = gen::random_shape(rng, 3, 80);
    shape.dangling_fraction = 0.15;
    const auto g = gen::random_graph(rng, shape);
    const double d = rng.uniform(0.1, 0.95);
    const auto r = solve_exact(g, d, 1e-12, 10000);
    CHECK(r.residual < 1e-12);
    CHECK(fixed_point_residual(g, d, r.score) < 1e-12);
    const auto o = oracle::exact_scores(g, d);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(r.score[i] >= 0.0);
      CHECK(std::abs(r.score[i] - o[i]) <= 1e-10);
    }
  }
}

TEST_CASE("property: total mass is preserved without dangling items") {
  gen::Rng rng(78);
  for (int trial = 0; trial < 20; ++trial) {
    auto shape = gen::random_shape(rng, 3, 80);
    const auto g = gen::random_graph(rng, shape);
    bool any_dangling = false;
    for (Index i = 0; i < g.size(); ++i) any_dangling = any_dangling || g.is_dangling(i);
    if (any_dangling) continue;
    const auto r = solve_exact(g, 0.85, 1e-13, 10000);
    const double mass_r = std::accumulate(r.score.begin(), r.score.end(), 0.0);
    const double mass_w = std::accumulate(g.priors().begin(), g.priors().end(), 0.0);
    CHECK(std::abs(mass_r - mass_w) <= 1e-9);
  }
}

TEST_CASE("property: raising one prior never lowers that item's score") {
  gen::Rng rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = gen::random_graph(rng, gen::random_shape(rng, 3, 50));
    const auto before = solve_exact(g, 0.85, 1e-13, 10000);
    const Index item = static_cast<Index>(rng.below(g.size()));
    std::vector<double> w(g.priors().begin(), g.priors().end());
    w[item] *= 3.0;
    w = normalize_priors(g.catalog(), w);
    std::vector<Index> all(g.size());
    std::iota(all.begin(), all.end(), Index{0});
    const auto changes = g.plan_prior_change(w, all);
    g.commit_prior_change(w, changes);
    const auto after = solve_exact(g, 0.85, 1e-13, 10000);
    CHECK(after.score[item] >= before.score[item] - 1e-12);
  }
}

TEST_CASE("non-convergence carries the last residual") {
  gen::Rng rng(80);
  const auto g = gen::random_graph(rng, {20, 10, 10, 4, 0.0});
  try {
    solve_exact(g, 0.85, 1e-15, 2);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 1e-15);
  }
}

TEST_CASE("invalid damping or tolerance") {
  const auto g = gen::graph_from_edges({ItemKind::Post}, {}, {1.0});
  CHECK_THROWS_AS(solve_exact(g, 1.0, 1e-12, 10), Error);
  CHECK_THROWS_AS(solve_exact(g, 0.5, 0.0, 10), Error);
}
