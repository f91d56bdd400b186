#include "mrgrank/clustering.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <set>

#include "mrgrank/error.hpp"

namespace mrgrank {

ClusterModel::ClusterModel(ItemKind kind, std::vector<std::string> ids, std::vector<Merge> merges)
    : kind_(kind), ids_(std::move(ids)), merges_(std::move(merges)) {
  if (!ids_.empty() && merges_.size() != ids_.size() - 1) {
    throw Error(ErrorCode::InvalidArgument, "a hierarchy over n items needs n-1 merges");
  }
}

std::size_t ClusterModel::depth() const {
  const std::size_t n = ids_.size();
  if (n <= 1) return 0;
  std::vector<std::size_t> d(2 * n - 1, 0);
  for (std::size_t m = 0; m < merges_.size(); ++m) {
    d[n + m] = 1 + std::max(d[merges_[m].left], d[merges_[m].right]);
  }
  return d[root()];
}

std::vector<Index> ClusterModel::members(std::size_t node) const {
  const std::size_t n = ids_.size();
  std::vector<Index> out;
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const std::size_t x = stack.back();
    stack.pop_back();
    if (x < n) {
      out.push_back(static_cast<Index>(x));
    } else {
      stack.push_back(merges_[x - n].left);
      stack.push_back(merges_[x - n].right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Cluster> ClusterModel::partition(std::size_t level) const {
  if (ids_.empty()) return {};
  if (level > max_level()) throw Error(ErrorCode::OutOfRange, "cluster level out of range");
  const std::size_t n = ids_.size();
  std::set<std::size_t> nodes{root()};
  for (std::size_t undone = 0; undone < level; ++undone) {
    const std::size_t m = merges_.size() - 1 - undone;
    nodes.erase(n + m);
    nodes.insert(merges_[m].left);
    nodes.insert(merges_[m].right);
  }
  std::vector<Cluster> out;
  for (std::size_t node : nodes) out.push_back({node, members(node)});
  std::sort(out.begin(), out.end(),
            [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
  return out;
}

nlohmann::json ClusterModel::tree_json() const {
  const std::size_t n = ids_.size();
  if (n == 0) return nullptr;
  auto build = [&](auto&& self, std::size_t node) -> nlohmann::json {
    nlohmann::json j;
    j["node"] = node;
    nlohmann::json ids = nlohmann::json::array();
    for (Index m : members(node)) ids.push_back(ids_[m]);
    j["members"] = std::move(ids);
    if (node >= n) {
      const Merge& mg = merges_[node - n];
      j["affinity"] = mg.affinity;
      j["children"] = {self(self, mg.left), self(self, mg.right)};
    } else {
      j["children"] = nlohmann::json::array();
    }
    return j;
  };
  return build(build, root());
}

ClusterModel build_hierarchy(ItemKind kind, std::vector<std::string> ids,
                             const SparseMatrix& affinity) {
  const std::size_t n = ids.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "hierarchy needs at least one item");
  if (affinity.rows() != n || affinity.cols() != n) {
    throw Error(ErrorCode::InvalidArgument, "affinity matrix does not match the item count");
  }

  // rank[i]: position of item i in id order, used for tie-breaking.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  std::vector<double> sums(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto idx = affinity.row_indices(i);
    auto vals = affinity.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] == i) continue;
      // Symmetrise by averaging so a one-sided entry still links the pair.
      sums[i * n + idx[k]] += 0.5 * vals[k];
      sums[idx[k] * n + i] += 0.5 * vals[k];
    }
  }

  std::vector<std::size_t> node(n), size(n, 1), key(rank);
  std::vector<char> alive(n, 1);
  std::iota(node.begin(), node.end(), 0);
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_a = n, best_b = n;
    double best = -1.0;
    std::pair<std::size_t, std::size_t> best_key{n, n};
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!alive[b]) continue;
        const double avg = sums[a * n + b] / static_cast<double>(size[a] * size[b]);
        const std::pair<std::size_t, std::size_t> k = std::minmax(key[a], key[b]);
        if (avg > best || (avg == best && k < best_key)) {
          best = avg;
          best_key = k;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (key[best_b] < key[best_a]) std::swap(best_a, best_b);
    merges.push_back({node[best_a], node[best_b], best, size[best_a] + size[best_b]});
    for (std::size_t c = 0; c < n; ++c) {
      sums[best_a * n + c] += sums[best_b * n + c];
      sums[c * n + best_a] = sums[best_a * n + c];
    }
    sums[best_a * n + best_a] = 0.0;
    alive[best_b] = 0;
    size[best_a] += size[best_b];
    key[best_a] = std::min(key[best_a], key[best_b]);
    node[best_a] = n + step;
  }
  return ClusterModel(kind, std::move(ids), std::move(merges));
}

Representatives select_representatives(std::span<const Index> members,
                                       std::span<const double> scores,
                                       std::span<const std::string> ids,
                                       const SparseMatrix& affinity, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<Index> ranked(members.begin(), members.end());
  std::sort(ranked.begin(), ranked.end(), [&](Index a, Index b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : ids[a] < ids[b];
  });
  Representatives r;
  r.items.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranked.size())));
  r.assigned.resize(members.size(), 0);
  for (std::size_t m = 0; m < members.size(); ++m) {
    const Index item = members[m];
    auto self = std::find(r.items.begin(), r.items.end(), item);
    if (self != r.items.end()) {
      r.assigned[m] = static_cast<std::size_t>(self - r.items.begin());
      continue;
    }
    std::size_t best = 0;
    double best_aff = -1.0;
    for (std::size_t q = 0; q < r.items.size(); ++q) {
      const double a = std::max(affinity.at(item, r.items[q]), affinity.at(r.items[q], item));
      if (a > best_aff) {
        best_aff = a;
        best = q;
      }
    }
    r.assigned[m] = best;
  }
  return r;
}

bool ClusterGraph::has_edge(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  return std::binary_search(edges.begin(), edges.end(), ClusterEdge{a, b, 0},
                            [](const ClusterEdge& x, const ClusterEdge& y) {
                              return std::tie(x.a, x.b) < std::tie(y.a, y.b);
                            });
}

std::string cluster_id(ItemKind kind, std::size_t level, std::size_t node) {
  return std::string(to_string(kind)) + ":" + std::to_string(level) + ":" + std::to_string(node);
}

ClusterRef parse_cluster_id(const std::string& id) {
  const auto a = id.find(':');
  const auto b = a == std::string::npos ? a : id.find(':', a + 1);
  if (b == std::string::npos) throw Error(ErrorCode::Parse, "malformed cluster id: " + id);
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorCode::Parse, "malformed cluster id: " + id);
    }
    return v;
  };
  ClusterRef ref;
  const auto kind = parse_kind(std::string_view(id).substr(0, a));
  if (!kind) throw Error(ErrorCode::Parse, "malformed cluster id: " + id);
  ref.kind = *kind;
  const std::string_view rest(id);
  ref.level = number(rest.substr(a + 1, b - a - 1));
  ref.node = number(rest.substr(b + 1));
  return ref;
}

ClusterGraph build_cluster_graph(const std::vector<Cluster>& partition,
                                 const SparseMatrix& affinity, std::size_t threshold) {
  std::vector<std::size_t> owner(affinity.rows(), SIZE_MAX);
  for (std::size_t c = 0; c < partition.size(); ++c) {
    for (Index m : partition[c].members) {
      if (m >= owner.size()) throw Error(ErrorCode::OutOfRange, "cluster member out of range");
      owner[m] = c;
    }
  }
  std::set<std::pair<Index, Index>> pairs;
  for (std::size_t i = 0; i < affinity.rows(); ++i) {
    auto idx = affinity.row_indices(i);
    auto vals = affinity.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (vals[k] <= 0.0 || idx[k] == i) continue;
      pairs.emplace(std::min<Index>(static_cast<Index>(i), idx[k]), std::max<Index>(static_cast<Index>(i), idx[k]));
    }
  }
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  for (const auto& [i, j] : pairs) {
    const std::size_t a = owner[i], b = owner[j];
    if (a == SIZE_MAX || b == SIZE_MAX || a == b) continue;
    ++counts[std::minmax(a, b)];
  }
  ClusterGraph g;
  g.cluster_count = partition.size();
  for (std::size_t a = 0; a < partition.size(); ++a) {
    for (std::size_t b = a + 1; b < partition.size(); ++b) {
      auto it = counts.find({a, b});
      const std::size_t c = it == counts.end() ? 0 : it->second;
      if (c >= threshold) g.edges.push_back({a, b, c});
    }
  }
  return g;
}

}  // namespace mrgrank
