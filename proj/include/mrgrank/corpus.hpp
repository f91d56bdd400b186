#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mrgrank {

enum class ItemKind : std::uint8_t { Post = 0, User = 1, Hashtag = 2 };

inline constexpr std::size_t kKindCount = 3;
inline constexpr ItemKind kAllKinds[kKindCount] = {ItemKind::Post, ItemKind::User,
                                                  ItemKind::Hashtag};

std::string_view to_string(ItemKind kind);
std::optional<ItemKind> parse_kind(std::string_view text);

struct PostRecord {
  std::string id;
  std::string author_id;
  std::string text;
  std::vector<std::string> hashtags;
  std::string timestamp;
  double retweet_count = 0.0;
};

struct UserRecord {
  std::string id;
  std::string handle;
  std::vector<std::string> followers;  // ids of users following this user
  double follower_count = 0.0;
};

struct Corpus {
  std::vector<PostRecord> posts;
  std::vector<UserRecord> users;
};

// Newline-delimited JSON, one record per line; blank lines are skipped.
std::vector<PostRecord> read_posts_jsonl(std::istream& in);
std::vector<UserRecord> read_users_jsonl(std::istream& in);
void write_posts_jsonl(std::ostream& out, const std::vector<PostRecord>& posts);
void write_users_jsonl(std::ostream& out, const std::vector<UserRecord>& users);

Corpus load_corpus(const std::string& posts_path, const std::string& users_path);

/// Lowercases, splits on anything that is not ASCII alphanumeric and drops
/// tokens shorter than two characters. No stemming.
std::vector<std::string> tokenize(std::string_view text);

/// "#Shutdown" and "shutdown" name the same tag: "shutdown".
std::string normalize_hashtag(std::string_view tag);

}  // namespace mrgrank
