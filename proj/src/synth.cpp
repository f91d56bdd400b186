#include "mrgrank/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "mrgrank/error.hpp"

namespace mrgrank {

namespace {

constexpr const char* kTopics[][10] = {
    {"budget", "senate", "vote", "deal", "house", "bill", "funding", "deadline", "congress", "debt"},
    {"virus", "outbreak", "clinic", "vaccine", "patients", "doctors", "symptoms", "quarantine", "hospital", "cases"},
    {"market", "stocks", "rally", "investors", "shares", "trading", "earnings", "index", "prices", "bonds"},
    {"storm", "rain", "flood", "wind", "coast", "warning", "forecast", "shelter", "damage", "power"},
    {"match", "goal", "league", "coach", "players", "season", "score", "final", "fans", "stadium"},
    {"phone", "launch", "software", "update", "device", "battery", "screen", "release", "apps", "chip"},
    {"film", "actor", "premiere", "festival", "director", "award", "trailer", "cast", "studio", "review"},
    {"school", "students", "teachers", "exam", "campus", "tuition", "classes", "degree", "grades", "library"},
};
constexpr std::size_t kTopicCount = std::size(kTopics);

constexpr const char* kFiller[] = {"today", "news", "update", "people", "right", "now", "think",
                                   "watch", "read", "story", "again", "really", "still", "big"};

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }

 private:
  std::mt19937_64 rng_;
};

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.planted == 0 || spec.planted > spec.users || spec.planted > spec.hashtags ||
      spec.planted > spec.posts) {
    throw Error(ErrorCode::InvalidArgument, "planted count must be positive and fit every kind");
  }
  Draw draw(spec.seed);
  SyntheticCorpus out;

  // Planted items sit at scattered positions so catalog order gives no hint.
  auto scatter = [&](std::size_t n) {
    std::set<std::size_t> picked;
    while (picked.size() < spec.planted) picked.insert(draw.below(n));
    return picked;
  };
  const auto planted_users = scatter(spec.users);
  const auto planted_tags = scatter(spec.hashtags);
  const auto planted_posts = scatter(spec.posts);
  const std::vector<std::size_t> planted_user_list(planted_users.begin(), planted_users.end());
  const std::vector<std::size_t> planted_tag_list(planted_tags.begin(), planted_tags.end());
  std::vector<std::size_t> plain_tags;
  for (std::size_t t = 0; t < spec.hashtags; ++t) {
    if (!planted_tags.count(t)) plain_tags.push_back(t);
  }

  std::vector<std::string> tag_names;
  for (std::size_t t = 0; t < spec.hashtags; ++t) {
    tag_names.push_back(std::string(kTopics[t % kTopicCount][t / kTopicCount % 10]) +
                        padded("", t, 2));
  }

  auto& users = out.corpus.users;
  for (std::size_t u = 0; u < spec.users; ++u) {
    UserRecord r;
    r.id = padded("u", u, 3);
    r.handle = padded("user_", u, 3);
    r.follower_count = planted_users.count(u) ? 5000.0 + static_cast<double>(draw.below(5000))
                                              : 10.0 + static_cast<double>(draw.below(290));
    users.push_back(std::move(r));
  }
  for (std::size_t u = 0; u < spec.users; ++u) {
    for (std::size_t f = 0; f < spec.users; ++f) {
      if (f == u) continue;
      const double p = planted_users.count(u) ? 0.7 : 0.04;
      if (draw.chance(p)) users[u].followers.push_back(users[f].id);
    }
  }

  auto& posts = out.corpus.posts;
  std::size_t plain_cursor = 0;  // every tag is used at least once
  for (std::size_t i = 0; i < spec.posts; ++i) {
    const bool planted = planted_posts.count(i) != 0;
    PostRecord r;
    r.id = padded("p", i, 4);
    const std::size_t topic = planted ? std::distance(planted_posts.begin(), planted_posts.find(i)) % kTopicCount
                                      : draw.below(kTopicCount);
    if (planted || draw.chance(0.5)) {
      r.author_id = users[planted_user_list[draw.below(planted_user_list.size())]].id;
    } else {
      r.author_id = users[draw.below(spec.users)].id;
    }
    std::vector<std::string> words;
    if (planted) {
      // The full topic vocabulary: similar to every post on the topic.
      for (const char* w : kTopics[topic]) words.emplace_back(w);
    } else {
      const std::size_t n = 4 + draw.below(4);
      for (std::size_t k = 0; k < n; ++k) words.emplace_back(kTopics[topic][draw.below(10)]);
      words.emplace_back(kFiller[draw.below(std::size(kFiller))]);
      words.emplace_back(kFiller[draw.below(std::size(kFiller))]);
    }
    for (std::size_t k = 0; k < words.size(); ++k) r.text += (k ? " " : "") + words[k];
    const std::size_t tag_count = planted ? 3 : 1 + draw.below(2);
    std::set<std::size_t> tags;
    while (tags.size() < tag_count) {
      if (planted || draw.chance(0.6)) {
        tags.insert(planted_tag_list[draw.below(planted_tag_list.size())]);
      } else {
        tags.insert(plain_tags[draw.below(plain_tags.size())]);
      }
    }
    if (!planted && plain_cursor < plain_tags.size()) tags.insert(plain_tags[plain_cursor++]);
    for (std::size_t t : tags) r.hashtags.push_back("#" + tag_names[t]);
    const std::size_t minute = i * 7;
    char ts[32];
    std::snprintf(ts, sizeof ts, "2013-10-%02zuT%02zu:%02zu:00Z", 1 + minute / 1440 % 28,
                  minute / 60 % 24, minute % 60);
    r.timestamp = ts;
    r.retweet_count = planted ? 1500.0 + static_cast<double>(draw.below(1500))
                              : static_cast<double>(draw.below(25));
    posts.push_back(std::move(r));
  }

  for (std::size_t i : planted_posts) out.planted[0].push_back(posts[i].id);
  for (std::size_t u : planted_users) out.planted[1].push_back(users[u].id);
  for (std::size_t t : planted_tags) out.planted[2].push_back("#" + normalize_hashtag(tag_names[t]));
  for (auto& p : out.planted) std::sort(p.begin(), p.end());
  return out;
}

nlohmann::json planted_json(const SyntheticCorpus& synthetic) {
  nlohmann::json j;
  for (ItemKind k : kAllKinds) j[std::string(to_string(k))] = synthetic.planted[static_cast<std::size_t>(k)];
  return j;
}

void write_synthetic(const SyntheticCorpus& synthetic, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("posts.jsonl");
    write_posts_jsonl(f, synthetic.corpus.posts);
  }
  {
    auto f = open("users.jsonl");
    write_users_jsonl(f, synthetic.corpus.users);
  }
  auto f = open("planted.json");
  f << planted_json(synthetic).dump(2) << '\n';
}

}  // namespace mrgrank
