#include "mrgrank/corpus.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "mrgrank/error.hpp"

namespace mrgrank {

using nlohmann::json;

std::string_view to_string(ItemKind kind) {
  switch (kind) {
    case ItemKind::Post: return "post";
    case ItemKind::User: return "user";
    case ItemKind::Hashtag: return "hashtag";
  }
  return "unknown";
}

std::optional<ItemKind> parse_kind(std::string_view text) {
  if (text == "post") return ItemKind::Post;
  if (text == "user") return ItemKind::User;
  if (text == "hashtag") return ItemKind::Hashtag;
  return std::nullopt;
}

namespace {

template <class Fn>
void for_each_json_line(std::istream& in, const char* what, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Parse, std::string(what) + " line " + std::to_string(line_no) +
                                        ": " + e.what());
    }
    if (!record.is_object()) {
      throw Error(ErrorCode::Parse,
                  std::string(what) + " line " + std::to_string(line_no) + ": not an object");
    }
    try {
      fn(record);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse, std::string(what) + " line " + std::to_string(line_no) +
                                        ": " + e.what());
    }
  }
}

std::string id_field(const json& record, const char* key) {
  const json& v = record.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(ErrorCode::Parse, std::string("field '") + key + "' must be a string id");
}

double count_field(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return 0.0;
  double v = it->get<double>();
  if (v < 0.0) throw Error(ErrorCode::Parse, std::string("negative ") + key);
  return v;
}

}  // namespace

std::vector<PostRecord> read_posts_jsonl(std::istream& in) {
  std::vector<PostRecord> posts;
  for_each_json_line(in, "posts", [&](const json& r) {
    PostRecord p;
    p.id = id_field(r, "id");
    p.author_id = id_field(r, "author_id");
    p.text = r.value("text", std::string{});
    if (auto it = r.find("hashtags"); it != r.end() && !it->is_null()) {
      for (const auto& tag : *it) p.hashtags.push_back(tag.get<std::string>());
    }
    if (auto it = r.find("timestamp"); it != r.end() && !it->is_null()) {
      p.timestamp = it->is_string() ? it->get<std::string>() : it->dump();
    }
    p.retweet_count = count_field(r, "retweet_count");
    posts.push_back(std::move(p));
  });
  return posts;
}

std::vector<UserRecord> read_users_jsonl(std::istream& in) {
  std::vector<UserRecord> users;
  for_each_json_line(in, "users", [&](const json& r) {
    UserRecord u;
    u.id = id_field(r, "id");
    u.handle = r.value("handle", u.id);
    if (auto it = r.find("followers"); it != r.end() && !it->is_null()) {
      for (const auto& f : *it) {
        u.followers.push_back(f.is_string() ? f.get<std::string>()
                                            : std::to_string(f.get<long long>()));
      }
    }
    u.follower_count = count_field(r, "follower_count");
    users.push_back(std::move(u));
  });
  return users;
}

void write_posts_jsonl(std::ostream& out, const std::vector<PostRecord>& posts) {
  for (const auto& p : posts) {
    json r = {{"id", p.id},           {"author_id", p.author_id},
              {"text", p.text},       {"hashtags", p.hashtags},
              {"timestamp", p.timestamp}, {"retweet_count", p.retweet_count}};
    out << r.dump() << '\n';
  }
}

void write_users_jsonl(std::ostream& out, const std::vector<UserRecord>& users) {
  for (const auto& u : users) {
    json r = {{"id", u.id},
              {"handle", u.handle},
              {"followers", u.followers},
              {"follower_count", u.follower_count}};
    out << r.dump() << '\n';
  }
}

Corpus load_corpus(const std::string& posts_path, const std::string& users_path) {
  std::ifstream posts_in(posts_path);
  if (!posts_in) throw Error(ErrorCode::Io, "cannot open " + posts_path);
  std::ifstream users_in(users_path);
  if (!users_in) throw Error(ErrorCode::Io, "cannot open " + users_path);
  Corpus c;
  c.posts = read_posts_jsonl(posts_in);
  c.users = read_users_jsonl(users_in);
  return c;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string normalize_hashtag(std::string_view tag) {
  while (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  std::string out;
  out.reserve(tag.size());
  for (char ch : tag) {
    const auto c = static_cast<unsigned char>(ch);
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

}  // namespace mrgrank
