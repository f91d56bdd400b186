#include "mrgrank/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mrgrank/error.hpp"

namespace mrgrank {

// --- Catalog -------------------------------------------------------------------

Catalog::Catalog(std::vector<Item> items) : items_(std::move(items)) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto kind = static_cast<std::size_t>(items_[i].kind);
    if (kind < k) throw Error(ErrorCode::InvalidArgument, "catalog items must be grouped by kind");
    while (k < kind) offsets_[++k] = i;
  }
  while (k < kKindCount) offsets_[++k] = items_.size();
  by_id_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!by_id_.emplace(items_[i].id, static_cast<Index>(i)).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate item id '" + items_[i].id + "'");
    }
  }
}

std::optional<Index> Catalog::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Index Catalog::require(std::string_view id) const {
  auto found = find(id);
  if (!found) throw Error(ErrorCode::NotFound, "unknown item '" + std::string(id) + "'");
  return *found;
}

AffinityBlocks AffinityBlocks::empty(const Catalog& catalog) {
  AffinityBlocks b;
  for (ItemKind from : kAllKinds) {
    for (ItemKind to : kAllKinds) b.at(from, to) = SparseMatrix(catalog.count(from), catalog.count(to));
  }
  return b;
}

std::vector<double> normalize_priors(const Catalog& catalog, std::vector<double> raw) {
  if (raw.size() != catalog.size()) {
    throw Error(ErrorCode::InvalidArgument, "prior vector size does not match item count");
  }
  for (ItemKind kind : kAllKinds) {
    const std::size_t begin = catalog.offset(kind);
    const std::size_t n = catalog.count(kind);
    double sum = 0.0;
    for (std::size_t i = begin; i < begin + n; ++i) {
      if (!(raw[i] >= 0.0) || !std::isfinite(raw[i])) {
        throw Error(ErrorCode::InvalidArgument, "priors must be finite and non-negative");
      }
      sum += raw[i];
    }
    for (std::size_t i = begin; i < begin + n; ++i) {
      raw[i] = sum > 0.0 ? raw[i] / sum : 1.0 / static_cast<double>(n);
    }
  }
  return raw;
}

// --- Assembly ------------------------------------------------------------------

HeterogeneousGraph HeterogeneousGraph::assemble(Catalog catalog, AffinityBlocks blocks,
                                                std::vector<double> priors) {
  blocks.alpha.validate();
  if (priors.size() != catalog.size()) {
    throw Error(ErrorCode::InvalidArgument, "prior vector size does not match item count");
  }
  for (double w : priors) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidArgument, "priors must be finite and non-negative");
    }
  }
  for (ItemKind from : kAllKinds) {
    double alpha_total = 0.0;
    bool has_edges = false;
    for (ItemKind to : kAllKinds) {
      const SparseMatrix& b = blocks.at(from, to);
      if (b.rows() != catalog.count(from) || b.cols() != catalog.count(to)) {
        throw Error(ErrorCode::InvalidArgument,
                    "affinity block " + std::string(to_string(from)) + "->" +
                        std::string(to_string(to)) + " has the wrong shape");
      }
      for (double v : b.values()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw Error(ErrorCode::InvalidArgument, "affinities must be finite and non-negative");
        }
        has_edges = has_edges || v > 0.0;
      }
      alpha_total += blocks.alpha.at(from, to);
    }
    if (has_edges && alpha_total == 0.0) {
      throw Error(ErrorCode::InvalidArgument, "degenerate mixing weights");
    }
  }

  const std::size_t n = catalog.size();
  std::vector<std::size_t> row_ptr(n + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (ItemKind from : kAllKinds) {
    for (std::size_t li = 0; li < catalog.count(from); ++li) {
      for (ItemKind to : kAllKinds) {
        const SparseMatrix& b = blocks.at(from, to);
        auto idx = b.row_indices(li);
        auto v = b.row_values(li);
        for (std::size_t k = 0; k < idx.size(); ++k) {
          if (v[k] > 0.0) {
            cols.push_back(catalog.global(to, idx[k]));
            vals.push_back(v[k]);
          }
        }
      }
      row_ptr[catalog.global(from, li) + 1] = cols.size();
    }
  }

  HeterogeneousGraph g;
  g.catalog_ = std::move(catalog);
  g.blocks_ = std::move(blocks);
  g.priors_ = std::move(priors);
  g.raw_ = SparseMatrix::from_csr(n, n, std::move(row_ptr), cols, vals);
  g.transition_ = g.raw_;
  for (Index i = 0; i < n; ++i) g.compute_row(i, g.priors_, g.transition_.row_values_mut(i));
  g.incoming_ = g.raw_.transposed();
  return g;
}

void HeterogeneousGraph::compute_row(Index i, std::span<const double> priors,
                                     std::span<double> out) const {
  const ItemKind from = catalog_.kind_of(i);
  auto idx = raw_.row_indices(i);
  auto vals = raw_.row_values(i);
  std::array<double, kKindCount> share{};
  for (std::size_t k = 0; k < idx.size(); ++k) {
    share[static_cast<std::size_t>(catalog_.kind_of(idx[k]))] += vals[k] * priors[idx[k]];
  }
  double alpha_total = 0.0;
  for (ItemKind to : kAllKinds) {
    if (share[static_cast<std::size_t>(to)] > 0.0) alpha_total += blocks_.alpha.at(from, to);
  }
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const ItemKind to = catalog_.kind_of(idx[k]);
    const double s = share[static_cast<std::size_t>(to)];
    if (s > 0.0 && alpha_total > 0.0) {
      out[k] = blocks_.alpha.at(from, to) * (vals[k] * priors[idx[k]] / s) / alpha_total;
    } else {
      out[k] = 0.0;
    }
  }
}

SparseMatrix HeterogeneousGraph::symmetric_affinity(ItemKind kind) const {
  const SparseMatrix& a = blocks_.at(kind, kind);
  const SparseMatrix at = a.transposed();
  const std::size_t n = a.rows();
  std::vector<std::size_t> row_ptr(n + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < n; ++r) {
    auto ia = a.row_indices(r), ib = at.row_indices(r);
    auto va = a.row_values(r), vb = at.row_values(r);
    std::size_t p = 0, q = 0;
    while (p < ia.size() || q < ib.size()) {
      Index c;
      double v;
      if (q == ib.size() || (p < ia.size() && ia[p] < ib[q])) {
        c = ia[p];
        v = va[p++];
      } else if (p == ia.size() || ib[q] < ia[p]) {
        c = ib[q];
        v = vb[q++];
      } else {
        c = ia[p];
        v = std::max(va[p++], vb[q++]);
      }
      if (c != r && v > 0.0) {
        cols.push_back(c);
        vals.push_back(v);
      }
    }
    row_ptr[r + 1] = cols.size();
  }
  return SparseMatrix::from_csr(n, n, std::move(row_ptr), std::move(cols), std::move(vals));
}

std::vector<TransitionChange> HeterogeneousGraph::plan_prior_change(
    std::span<const double> new_priors, std::span<const Index> edited) const {
  if (new_priors.size() != priors_.size()) {
    throw Error(ErrorCode::InvalidArgument, "prior vector size does not match item count");
  }
  std::set<Index> rows;
  for (Index k : edited) {
    for (Index i : predecessors(k)) rows.insert(i);
  }
  std::vector<TransitionChange> changes;
  std::vector<double> fresh;
  for (Index i : rows) {
    auto idx = transition_.row_indices(i);
    auto old_vals = transition_.row_values(i);
    fresh.assign(idx.size(), 0.0);
    compute_row(i, new_priors, fresh);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (fresh[k] != old_vals[k]) changes.push_back({i, idx[k], old_vals[k], fresh[k]});
    }
  }
  return changes;
}

void HeterogeneousGraph::commit_prior_change(std::vector<double> new_priors,
                                             std::span<const TransitionChange> changes) {
  if (new_priors.size() != priors_.size()) {
    throw Error(ErrorCode::InvalidArgument, "prior vector size does not match item count");
  }
  priors_ = std::move(new_priors);
  for (const auto& c : changes) {
    auto idx = transition_.row_indices(c.from);
    auto it = std::lower_bound(idx.begin(), idx.end(), c.to);
    if (it == idx.end() || *it != c.to) {
      throw Error(ErrorCode::InvalidArgument, "transition change outside the graph pattern");
    }
    transition_.row_values_mut(c.from)[static_cast<std::size_t>(it - idx.begin())] = c.new_value;
  }
}

// --- Post similarity -----------------------------------------------------------

TermStats TermStats::from_documents(const std::vector<std::vector<std::string>>& docs) {
  TermStats s;
  s.documents = docs.size();
  for (const auto& doc : docs) {
    std::set<std::string> unique(doc.begin(), doc.end());
    for (const auto& t : unique) ++s.document_frequency[t];
  }
  return s;
}

double TermStats::idf(const std::string& term) const {
  auto it = document_frequency.find(term);
  const double df = it == document_frequency.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(documents)) / (1.0 + df)) + 1.0;
}

SparseMatrix build_post_graph(const std::vector<std::vector<std::string>>& post_tokens,
                              const TermStats& vocab, const SimilarityParams& params) {
  const std::size_t n = post_tokens.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty corpus");

  // Unit-normalised TF-IDF vectors over a shared term numbering.
  std::map<std::string, Index> term_id;
  for (const auto& doc : post_tokens) {
    for (const auto& t : doc) term_id.emplace(t, 0);
  }
  Index next = 0;
  for (auto& [term, id] : term_id) id = next++;
  std::vector<double> idf(term_id.size());
  for (const auto& [term, id] : term_id) idf[id] = vocab.idf(term);

  std::vector<std::vector<std::pair<Index, double>>> vec(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::map<Index, double> tf;
    for (const auto& t : post_tokens[p]) tf[term_id.at(t)] += 1.0;
    double norm2 = 0.0;
    for (auto& [id, w] : tf) {
      w *= idf[id];
      norm2 += w * w;
    }
    const double norm = std::sqrt(norm2);
    for (const auto& [id, w] : tf) vec[p].emplace_back(id, w / norm);
  }

  std::vector<std::vector<std::pair<Index, Index>>> postings(term_id.size());  // (post, slot)
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t s = 0; s < vec[p].size(); ++s) {
      postings[vec[p][s].first].emplace_back(static_cast<Index>(p), static_cast<Index>(s));
    }
  }

  // Each unordered pair is evaluated exactly once so both directions share one value.
  std::vector<std::vector<std::pair<Index, double>>> candidates(n);
  std::vector<double> acc(n, 0.0);
  std::vector<Index> touched;
  for (std::size_t i = 0; i < n; ++i) {
    touched.clear();
    for (const auto& [term, wi] : vec[i]) {
      for (const auto& [j, slot] : postings[term]) {
        if (j <= i) continue;
        if (acc[j] == 0.0) touched.push_back(j);
        acc[j] += wi * vec[j][slot].second;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (Index j : touched) {
      const double sim = std::min(acc[j], 1.0);
      acc[j] = 0.0;
      if (sim > params.threshold) {
        candidates[i].emplace_back(j, sim);
        candidates[j].emplace_back(static_cast<Index>(i), sim);
      }
    }
  }

  std::set<std::pair<Index, Index>> kept;
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = candidates[i];
    std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    const std::size_t keep = std::min(c.size(), params.top_k);
    for (std::size_t k = 0; k < keep; ++k) {
      const Index a = static_cast<Index>(i), b = c[k].first;
      kept.emplace(std::min(a, b), std::max(a, b));
    }
  }

  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, sim] : candidates[i]) {
      if (j > i && kept.count({static_cast<Index>(i), j})) {
        triplets.push_back({static_cast<Index>(i), j, sim});
        triplets.push_back({j, static_cast<Index>(i), sim});
      }
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(triplets));
}

// --- Users, hashtags, cross links ------------------------------------------------

UserGraph build_user_graph(const std::vector<UserRecord>& users) {
  std::unordered_map<std::string, Index> index;
  for (std::size_t i = 0; i < users.size(); ++i) index.emplace(users[i].id, static_cast<Index>(i));
  UserGraph g;
  std::set<std::pair<Index, Index>> edges;
  for (std::size_t j = 0; j < users.size(); ++j) {
    for (const auto& follower : users[j].followers) {
      auto it = index.find(follower);
      if (it == index.end()) {
        ++g.unresolved;
        continue;
      }
      if (it->second != j) edges.emplace(it->second, static_cast<Index>(j));
    }
  }
  std::vector<Triplet> t;
  for (const auto& [a, b] : edges) t.push_back({a, b, 1.0});
  g.follows = SparseMatrix::from_triplets(users.size(), users.size(), std::move(t));
  return g;
}

SparseMatrix build_hashtag_graph(const std::vector<std::vector<Index>>& post_tags,
                                 std::size_t hashtag_count) {
  std::vector<Triplet> t;
  for (const auto& tags : post_tags) {
    std::vector<Index> unique(tags);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (std::size_t a = 0; a < unique.size(); ++a) {
      for (std::size_t b = a + 1; b < unique.size(); ++b) {
        t.push_back({unique[a], unique[b], 1.0});
        t.push_back({unique[b], unique[a], 1.0});
      }
    }
  }
  return SparseMatrix::from_triplets(hashtag_count, hashtag_count, std::move(t));
}

CrossLinks build_cross_links(const std::vector<Index>& post_author,
                             const std::vector<std::vector<Index>>& post_tags,
                             std::size_t user_count, std::size_t hashtag_count) {
  const std::size_t posts = post_author.size();
  if (post_tags.size() != posts) {
    throw Error(ErrorCode::InvalidArgument, "post_tags and post_author disagree in length");
  }
  std::vector<Triplet> pu, ph, uh;
  for (std::size_t p = 0; p < posts; ++p) {
    pu.push_back({static_cast<Index>(p), post_author[p], 1.0});
    std::vector<Index> unique(post_tags[p]);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (Index t : unique) {
      ph.push_back({static_cast<Index>(p), t, 1.0});
      uh.push_back({post_author[p], t, 1.0});
    }
  }
  CrossLinks c;
  c.post_user = SparseMatrix::from_triplets(posts, user_count, std::move(pu));
  c.user_post = c.post_user.transposed();
  c.post_hashtag = SparseMatrix::from_triplets(posts, hashtag_count, std::move(ph));
  c.hashtag_post = c.post_hashtag.transposed();
  c.user_hashtag = SparseMatrix::from_triplets(user_count, hashtag_count, std::move(uh));
  c.hashtag_user = c.user_hashtag.transposed();
  return c;
}

BuiltGraph build_graph(const Corpus& corpus, const EngineConfig& config) {
  if (corpus.posts.empty()) throw Error(ErrorCode::InvalidArgument, "empty corpus");

  std::unordered_map<std::string, Index> user_index;
  for (std::size_t u = 0; u < corpus.users.size(); ++u) {
    user_index.emplace(corpus.users[u].id, static_cast<Index>(u));
  }

  std::map<std::string, std::size_t> tag_usage;
  std::vector<std::vector<std::string>> post_tag_names(corpus.posts.size());
  for (std::size_t p = 0; p < corpus.posts.size(); ++p) {
    std::set<std::string> unique;
    for (const auto& raw : corpus.posts[p].hashtags) {
      std::string tag = normalize_hashtag(raw);
      if (!tag.empty()) unique.insert(std::move(tag));
    }
    for (const auto& tag : unique) ++tag_usage[tag];
    post_tag_names[p].assign(unique.begin(), unique.end());
  }
  std::unordered_map<std::string, Index> tag_index;
  for (const auto& [tag, count] : tag_usage) {
    tag_index.emplace(tag, static_cast<Index>(tag_index.size()));
  }

  std::vector<Item> items;
  items.reserve(corpus.posts.size() + corpus.users.size() + tag_usage.size());
  std::vector<double> raw_priors;
  for (const auto& p : corpus.posts) {
    items.push_back({p.id, ItemKind::Post, p.text});
    raw_priors.push_back(1.0 + p.retweet_count);
  }
  for (const auto& u : corpus.users) {
    items.push_back({u.id, ItemKind::User, u.handle});
    raw_priors.push_back(1.0 + u.follower_count);
  }
  for (const auto& [tag, count] : tag_usage) {
    items.push_back({"#" + tag, ItemKind::Hashtag, "#" + tag});
    raw_priors.push_back(1.0 + static_cast<double>(count));
  }
  Catalog catalog(std::move(items));

  BuiltGraph out;
  std::vector<Index> post_author(corpus.posts.size());
  std::vector<std::vector<Index>> post_tags(corpus.posts.size());
  std::vector<std::vector<std::string>> tokens(corpus.posts.size());
  for (std::size_t p = 0; p < corpus.posts.size(); ++p) {
    auto it = user_index.find(corpus.posts[p].author_id);
    if (it == user_index.end()) {
      throw Error(ErrorCode::InvalidArgument, "post '" + corpus.posts[p].id +
                                                  "' has unknown author '" +
                                                  corpus.posts[p].author_id + "'");
    }
    post_author[p] = it->second;
    for (const auto& tag : post_tag_names[p]) post_tags[p].push_back(tag_index.at(tag));
    tokens[p] = tokenize(corpus.posts[p].text);
    if (tokens[p].empty()) ++out.report.empty_posts;
  }

  const std::size_t n_users = corpus.users.size();
  const std::size_t n_tags = tag_usage.size();
  AffinityBlocks blocks;
  blocks.alpha = config.alpha;
  blocks.at(ItemKind::Post, ItemKind::Post) =
      build_post_graph(tokens, TermStats::from_documents(tokens), config.similarity);
  UserGraph users = build_user_graph(corpus.users);
  out.report.unresolved_followers = users.unresolved;
  blocks.at(ItemKind::User, ItemKind::User) = std::move(users.follows);
  blocks.at(ItemKind::Hashtag, ItemKind::Hashtag) = build_hashtag_graph(post_tags, n_tags);
  CrossLinks links = build_cross_links(post_author, post_tags, n_users, n_tags);
  blocks.at(ItemKind::Post, ItemKind::User) = std::move(links.post_user);
  blocks.at(ItemKind::User, ItemKind::Post) = std::move(links.user_post);
  blocks.at(ItemKind::Post, ItemKind::Hashtag) = std::move(links.post_hashtag);
  blocks.at(ItemKind::Hashtag, ItemKind::Post) = std::move(links.hashtag_post);
  blocks.at(ItemKind::User, ItemKind::Hashtag) = std::move(links.user_hashtag);
  blocks.at(ItemKind::Hashtag, ItemKind::User) = std::move(links.hashtag_user);

  std::vector<double> priors = normalize_priors(catalog, std::move(raw_priors));
  out.graph = HeterogeneousGraph::assemble(std::move(catalog), std::move(blocks), std::move(priors));
  return out;
}

}  // namespace mrgrank
