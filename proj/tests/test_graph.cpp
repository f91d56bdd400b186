#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "mrgrank/error.hpp"
#include "mrgrank/graph.hpp"
#include "oracles.hpp"

using namespace mrgrank;

namespace {

std::vector<std::vector<std::string>> tokenize_all(const std::vector<std::string>& texts) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : texts) out.push_back(tokenize(t));
  return out;
}

// Hand-rolled TF-IDF cosine over whitespace-split documents.
double tfidf_cosine(const std::vector<std::vector<std::string>>& docs, std::size_t a, std::size_t b) {
  std::map<std::string, double> df;
  for (const auto& d : docs) {
    for (const auto& w : std::set<std::string>(d.begin(), d.end())) df[w] += 1.0;
  }
  const double n = static_cast<double>(docs.size());
  auto vec = [&](const std::vector<std::string>& d) {
    std::map<std::string, double> v;
    for (const auto& w : d) v[w] += std::log((1.0 + n) / (1.0 + df[w])) + 1.0;
    return v;
  };
  auto va = vec(docs[a]), vb = vec(docs[b]);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (auto& [w, x] : va) {
    na += x * x;
    if (vb.count(w)) dot += x * vb[w];
  }
  for (auto& [w, x] : vb) nb += x * x;
  return dot / std::sqrt(na * nb);
}

const std::vector<std::string> kTenDocs = {
    "budget shutdown congress", "shutdown congress vote",  "budget deal senate",
    "vote senate house",        "shutdown day three",      "congress budget talks",
    "house vote tonight",       "weather sunny today",     "football game tonight",
    "senate budget vote shutdown"};

Corpus small_corpus() {
  Corpus c;
  c.users = {{"u1", "one", {"u2"}, 9}, {"u2", "two", {"u1", "u3"}, 1}, {"u3", "three", {}, 0}};
  c.posts = {{"p1", "u1", "budget shutdown congress", {"#Shutdown", "#budget"}, "", 4},
             {"p2", "u2", "shutdown congress vote", {"#shutdown"}, "", 0},
             {"p3", "u1", "weather sunny today", {}, "", 1},
             {"p4", "u3", "senate budget vote shutdown", {"#budget", "#senate"}, "", 0}};
  return c;
}

}  // namespace

TEST_CASE("tf-idf cosine against the hand-rolled oracle on a ten document corpus") {
  const auto docs = tokenize_all(kTenDocs);
  const auto vocab = TermStats::from_documents(docs);
  SimilarityParams p;
  p.threshold = 0.0;
  const auto m = build_post_graph(docs, vocab, p);
  const double expected = tfidf_cosine(docs, 0, 1);
  CHECK(m.at(0, 1) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(m.at(0, 1) == doctest::Approx(0.6937311069761427).epsilon(1e-12));
  for (std::size_t a = 0; a < docs.size(); ++a) {
    CHECK(m.at(a, a) == 0.0);
    for (std::size_t b = 0; b < docs.size(); ++b) {
      if (a == b) continue;
      CHECK(m.at(a, b) == doctest::Approx(tfidf_cosine(docs, a, b)).epsilon(1e-12));
    }
  }
  CHECK(m.is_symmetric());
}

TEST_CASE("identical texts have similarity one, disjoint texts zero") {
  const auto docs = tokenize_all({"shutdown congress vote", "shutdown congress vote", "weather sunny"});
  const auto m = build_post_graph(docs, TermStats::from_documents(docs), {});
  CHECK(m.at(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.at(0, 2) == 0.0);
  CHECK_FALSE(m.contains(0, 2));
}

TEST_CASE("pairs at or below the threshold are dropped") {
  const auto docs = tokenize_all(kTenDocs);
  const auto vocab = TermStats::from_documents(docs);
  SimilarityParams p;
  p.threshold = 0.3;
  const auto m = build_post_graph(docs, vocab, p);
  for (std::size_t a = 0; a < docs.size(); ++a) {
    for (std::size_t b = 0; b < docs.size(); ++b) {
      if (a == b) continue;
      const double s = tfidf_cosine(docs, a, b);
      CHECK(m.contains(a, b) == (s > 0.3));
    }
  }
}

TEST_CASE("top-k keeps each post's strongest neighbours and stays symmetric") {
  const auto docs = tokenize_all(kTenDocs);
  const auto vocab = TermStats::from_documents(docs);
  SimilarityParams p;
  p.threshold = 0.0;
  p.top_k = 1;
  const auto m = build_post_graph(docs, vocab, p);
  CHECK(m.is_symmetric());
  for (std::size_t a = 0; a < docs.size(); ++a) {
    std::size_t best = a;
    double best_s = 0.0;
    for (std::size_t b = 0; b < docs.size(); ++b) {
      if (b == a) continue;
      const double s = tfidf_cosine(docs, a, b);
      if (s > best_s + 1e-12) {
        best_s = s;
        best = b;
      }
    }
    if (best != a) CHECK(m.contains(a, best));
    // Every kept pair is the top choice of at least one endpoint.
    for (Index b : m.row_indices(a)) {
      bool mine = true, theirs = true;
      for (std::size_t c = 0; c < docs.size(); ++c) {
        if (c != a && c != b && tfidf_cosine(docs, a, c) > m.at(a, b) + 1e-12) mine = false;
        if (c != a && c != b && tfidf_cosine(docs, b, c) > m.at(a, b) + 1e-12) theirs = false;
      }
      CHECK((mine || theirs));
    }
  }
}

TEST_CASE("empty corpus is rejected") {
  CHECK_THROWS_WITH_AS(build_post_graph({}, TermStats{}, {}), "empty corpus", Error);
  EngineConfig cfg;
  CHECK_THROWS_WITH_AS(build_graph(Corpus{}, cfg), "empty corpus", Error);
}

TEST_CASE("posts without tokens get empty rows") {
  const auto docs = tokenize_all({"", "shutdown vote", "shutdown vote"});
  const auto m = build_post_graph(docs, TermStats::from_documents(docs), {});
  CHECK(m.row_indices(0).empty());
  CHECK(m.at(1, 2) == doctest::Approx(1.0));
}

TEST_CASE("follower lists give directed follow edges") {
  // B lists A as a follower: A follows B.
  std::vector<UserRecord> users = {{"A", "", {}, 0}, {"B", "", {"A"}, 0}};
  const auto g = build_user_graph(users);
  CHECK(g.follows.at(0, 1) == 1.0);
  CHECK(g.follows.at(1, 0) == 0.0);
}

TEST_CASE("no follow edges give a zero matrix") {
  std::vector<UserRecord> users = {{"A", "", {}, 0}, {"B", "", {}, 0}};
  CHECK(build_user_graph(users).follows.nnz() == 0);
}

TEST_CASE("a five user chain has four superdiagonal entries") {
  std::vector<UserRecord> users = {{"A", "", {}, 0}, {"B", "", {"A"}, 0}, {"C", "", {"B"}, 0},
                                   {"D", "", {"C"}, 0}, {"E", "", {"D"}, 0}};
  const auto m = build_user_graph(users).follows;
  CHECK(m.nnz() == 4);
  for (Index i = 0; i < 4; ++i) CHECK(m.at(i, i + 1) == 1.0);
}

TEST_CASE("unknown followers are counted, self and repeated follows dropped") {
  std::vector<UserRecord> users = {{"A", "", {"ghost", "A", "B", "B"}, 0}, {"B", "", {}, 0}};
  const auto g = build_user_graph(users);
  CHECK(g.unresolved == 1);
  CHECK(g.follows.nnz() == 1);
  CHECK(g.follows.at(1, 0) == 1.0);
}

TEST_CASE("hashtag co-occurrence counts") {
  SUBCASE("never co-occurring") {
    const auto m = build_hashtag_graph({{0}, {1}}, 2);
    CHECK(m.nnz() == 0);
  }
  SUBCASE("three posts with the same pair") {
    const auto m = build_hashtag_graph({{0, 1}, {0, 1}, {1, 0}}, 2);
    CHECK(m.at(0, 1) == 3.0);
    CHECK(m.at(1, 0) == 3.0);
    CHECK(m.at(0, 0) == 0.0);
  }
  SUBCASE("one post with three tags") {
    const auto m = build_hashtag_graph({{0, 1, 2}}, 3);
    for (Index a = 0; a < 3; ++a) {
      for (Index b = 0; b < 3; ++b) CHECK(m.at(a, b) == (a == b ? 0.0 : 1.0));
    }
  }
}

TEST_CASE("cross links") {
  SUBCASE("one tagged post") {
    const auto x = build_cross_links({0}, {{0}}, 1, 1);
    CHECK(x.user_hashtag.at(0, 0) == 1.0);
    CHECK(x.post_user.at(0, 0) == 1.0);
    CHECK(x.post_hashtag.at(0, 0) == 1.0);
  }
  SUBCASE("four posts by one user with the same tag") {
    const auto x = build_cross_links({0, 0, 0, 0}, {{0}, {0}, {0}, {0}}, 1, 1);
    CHECK(x.user_hashtag.at(0, 0) == 4.0);
  }
  SUBCASE("untagged post") {
    const auto x = build_cross_links({0, 0}, {{}, {0}}, 1, 1);
    CHECK(x.post_hashtag.row_indices(0).empty());
  }
  SUBCASE("transposed blocks") {
    const auto x = build_cross_links({0, 1, 1}, {{0, 1}, {1}, {}}, 2, 2);
    CHECK(x.user_post == x.post_user.transposed());
    CHECK(x.hashtag_post == x.post_hashtag.transposed());
    CHECK(x.hashtag_user == x.user_hashtag.transposed());
  }
}

TEST_CASE("assemble: a lone item is dangling") {
  const auto g = gen::graph_from_edges({ItemKind::Post}, {}, {1.0});
  CHECK(g.is_dangling(0));
  CHECK(g.transition().row_sum(0) == 0.0);
}

TEST_CASE("assemble: two equally similar posts point at each other") {
  const auto g = gen::graph_from_edges({ItemKind::Post, ItemKind::Post},
                                       {{0, 1, 0.7}, {1, 0, 0.7}}, {0.5, 0.5});
  CHECK(g.transition_prob(0, 1) == 1.0);
  CHECK(g.transition_prob(1, 0) == 1.0);
  CHECK(g.transition_prob(0, 0) == 0.0);
}

TEST_CASE("assemble: rows follow similarity times destination prior") {
  const std::vector<double> w = {0.2, 0.3, 0.5};
  const auto g = gen::graph_from_edges({ItemKind::Post, ItemKind::Post, ItemKind::Post},
                                       {{0, 1, 1.0}, {0, 2, 0.5}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 0, 0.4}},
                                       w);
  // Row 0: 1.0*0.3 : 0.5*0.5 -> 0.3/0.55, 0.25/0.55.
  CHECK(g.transition_prob(0, 1) == doctest::Approx(0.3 / 0.55).epsilon(1e-15));
  CHECK(g.transition_prob(0, 2) == doctest::Approx(0.25 / 0.55).epsilon(1e-15));
  CHECK(g.transition_prob(1, 0) == doctest::Approx(0.2 / 0.7).epsilon(1e-15));
  CHECK(g.transition_prob(1, 2) == doctest::Approx(0.5 / 0.7).epsilon(1e-15));
  CHECK(g.transition_prob(2, 0) == 1.0);
}

TEST_CASE("assemble: mixing weights split a row across kinds") {
  // Post 0 links to post 1 and user 0; default alpha 0.5 / 0.25 renormalised
  // over the two kinds it reaches.
  const auto g = gen::graph_from_edges({ItemKind::Post, ItemKind::Post, ItemKind::User},
                                       {{0, 1, 1.0}, {0, 2, 1.0}}, {0.5, 0.5, 1.0});
  const Index u = g.catalog().require("u0");
  const Index p1 = g.catalog().require("p1");
  CHECK(g.transition_prob(0, p1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(g.transition_prob(0, u) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("assemble: all-zero mixing weights for a kind with edges") {
  MixingWeights a = MixingWeights::defaults();
  for (ItemKind to : kAllKinds) a.set(ItemKind::Post, to, 0.0);
  CHECK_THROWS_WITH_AS(gen::graph_from_edges({ItemKind::Post, ItemKind::Post}, {{0, 1, 1.0}}, {0.5, 0.5}, a),
                       "degenerate mixing weights", Error);
  // Without post edges the same weights are fine.
  CHECK_NOTHROW(gen::graph_from_edges({ItemKind::Post, ItemKind::User}, {{1, 0, 1.0}}, {1.0, 1.0}, a));
}

TEST_CASE("property: assembled rows are stochastic and match the scalar oracle") {
  gen::Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    auto shape = gen::random_shape(rng, 3, 60);
    shape.dangling_fraction = 0.1;
    const auto g = gen::random_graph(rng, shape);
    const auto oracle_m = oracle::dense_transition(g);
    const auto m = oracle::dense(g.transition());
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(m[i * n + j] == doctest::Approx(oracle_m[i * n + j]).epsilon(1e-13));
        sum += m[i * n + j];
      }
      if (g.is_dangling(static_cast<Index>(i))) {
        CHECK(sum == 0.0);
      } else {
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("build_graph: priors, blocks and catalog") {
  const auto built = build_graph(small_corpus(), EngineConfig{});
  const auto& g = built.graph;
  const auto& c = g.catalog();
  CHECK(c.count(ItemKind::Post) == 4);
  CHECK(c.count(ItemKind::User) == 3);
  CHECK(c.count(ItemKind::Hashtag) == 3);
  CHECK(c.find("#shutdown").has_value());
  CHECK(c.find("#budget").has_value());
  CHECK(c.find("#senate").has_value());
  // Hashtags sorted alphabetically after posts and users.
  CHECK(c[c.global(ItemKind::Hashtag, 0)].id == "#budget");

  double sums[3] = {0, 0, 0};
  for (Index i = 0; i < c.size(); ++i) sums[static_cast<int>(c.kind_of(i))] += g.priors()[i];
  for (double s : sums) CHECK(std::abs(s - 1.0) <= 1e-12);
  // 1 + retweets: 5, 1, 2, 1 over 9.
  CHECK(g.priors()[c.require("p1")] == doctest::Approx(5.0 / 9.0).epsilon(1e-15));
  // 1 + followers: 10, 2, 1 over 13.
  CHECK(g.priors()[c.require("u1")] == doctest::Approx(10.0 / 13.0).epsilon(1e-15));
  // 1 + usage: budget 2, senate 1, shutdown 2 -> 3, 2, 3 over 8.
  CHECK(g.priors()[c.require("#senate")] == doctest::Approx(2.0 / 8.0).epsilon(1e-15));

  CHECK(g.blocks().at(ItemKind::Post, ItemKind::Post).is_symmetric());
  CHECK(g.blocks().at(ItemKind::Hashtag, ItemKind::Hashtag).is_symmetric());
  for (ItemKind a : kAllKinds) {
    for (ItemKind b : kAllKinds) {
      if (a != b) CHECK(g.blocks().at(a, b) == g.blocks().at(b, a).transposed());
    }
  }
  CHECK(built.report.empty_posts == 0);
}

TEST_CASE("build_graph is deterministic") {
  const auto a = build_graph(small_corpus(), EngineConfig{});
  const auto b = build_graph(small_corpus(), EngineConfig{});
  CHECK(a.graph.transition() == b.graph.transition());
  CHECK(std::vector<double>(a.graph.priors().begin(), a.graph.priors().end()) ==
        std::vector<double>(b.graph.priors().begin(), b.graph.priors().end()));
}

TEST_CASE("posts must name a known author") {
  Corpus c = small_corpus();
  c.posts[0].author_id = "nobody";
  CHECK_THROWS_AS(build_graph(c, EngineConfig{}), Error);
}

TEST_CASE("duplicate ids are rejected") {
  Corpus c = small_corpus();
  c.posts[1].id = "p1";
  CHECK_THROWS_AS(build_graph(c, EngineConfig{}), Error);
}

TEST_CASE("symmetric affinity takes the entry-wise maximum") {
  const auto g = gen::graph_from_edges({ItemKind::User, ItemKind::User, ItemKind::User},
                                       {{0, 1, 1.0}, {1, 0, 3.0}, {2, 0, 2.0}}, {1, 1, 1});
  const auto s = g.symmetric_affinity(ItemKind::User);
  CHECK(s.is_symmetric());
  CHECK(s.at(0, 1) == 3.0);
  CHECK(s.at(0, 2) == 2.0);
  CHECK(s.at(1, 2) == 0.0);
}
