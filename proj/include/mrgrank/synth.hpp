#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrgrank/corpus.hpp"

namespace mrgrank {

struct SyntheticSpec {
  std::size_t posts = 500;
  std::size_t users = 60;
  std::size_t hashtags = 40;
  std::size_t planted = 10;  // per kind
  std::uint64_t seed = 7;
};

/// A corpus with a known answer: in every kind, `planted` items get a much
/// higher prior and far more links than the rest.
struct SyntheticCorpus {
  Corpus corpus;
  std::array<std::vector<std::string>, kKindCount> planted;  // catalog ids per kind
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

nlohmann::json planted_json(const SyntheticCorpus& synthetic);

/// Writes posts.jsonl, users.jsonl and planted.json into `dir`.
void write_synthetic(const SyntheticCorpus& synthetic, const std::string& dir);

}  // namespace mrgrank
