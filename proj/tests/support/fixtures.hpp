#pragma once

#include "mrgrank/session.hpp"
#include "mrgrank/synth.hpp"

namespace fixture {

inline mrgrank::EngineConfig small_config(std::size_t walks = 100, std::uint64_t seed = 5) {
  mrgrank::EngineConfig c;
  c.solver.walks_per_node = walks;
  c.solver.rng_seed = seed;
  c.clustering.representatives = 3;
  c.layout.density_resolution = 32;
  return c;
}

inline mrgrank::Corpus small_corpus() {
  mrgrank::SyntheticSpec spec;
  spec.posts = 120;
  spec.users = 20;
  spec.hashtags = 15;
  spec.planted = 3;
  spec.seed = 3;
  return mrgrank::generate_synthetic(spec).corpus;
}

/// A small corpus plus a user who neither posts nor follows, and a hashtag
/// that never appears next to another one.
inline mrgrank::Corpus corpus_with_loners() {
  mrgrank::Corpus c = small_corpus();
  c.users.push_back({"zz_lurker", "lurker", {}, 0});
  c.posts.push_back({"zz_post", c.users.front().id, "completely unrelated words here", {"#zzlonely"}, "", 0});
  return c;
}

inline mrgrank::Session solved_session(mrgrank::SolveMethod method = mrgrank::SolveMethod::MonteCarlo,
                                       std::size_t walks = 100) {
  auto s = mrgrank::Session::build(small_config(walks), corpus_with_loners());
  s.solve(method);
  return s;
}

}  // namespace fixture
