#include "mrgrank/walks.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "mrgrank/error.hpp"

namespace mrgrank {

static_assert(std::endian::native == std::endian::little,
              "walk snapshots are written in host byte order");

namespace {

constexpr char kSnapshotMagic[8] = {'M', 'R', 'G', 'W', 'A', 'L', 'K', 'S'};
constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

std::uint64_t edge_key(Index from, Index to) {
  return (static_cast<std::uint64_t>(from) << 32) | to;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// One independent stream per start item, keyed by (seed, item id), so the
// sample does not depend on thread count or scheduling.
std::mt19937_64 stream_for(std::uint64_t seed, std::string_view item_id) {
  const std::uint64_t h = fnv1a(item_id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

struct StartWalks {
  std::vector<Index> nodes;
  std::vector<std::size_t> lengths;  // nodes per walk
  std::vector<double> probs;         // per step
};

struct RowSampler {
  const SparseMatrix* m;
  std::vector<double> cumulative;  // aligned with m->values()
  std::vector<double> total;

  explicit RowSampler(const SparseMatrix& matrix) : m(&matrix), total(matrix.rows(), 0.0) {
    cumulative.resize(matrix.nnz());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      double acc = 0.0;
      const std::size_t base = matrix.row_begin(r);
      auto vals = matrix.row_values(r);
      for (std::size_t k = 0; k < vals.size(); ++k) {
        acc += vals[k];
        cumulative[base + k] = acc;
      }
      total[r] = acc;
    }
  }

  // Returns the slot within row r; zero-probability entries are never chosen.
  std::size_t pick(std::size_t r, double u) const {
    const std::size_t base = m->row_begin(r);
    const std::size_t len = m->row_indices(r).size();
    const double target = u * total[r];
    auto first = cumulative.begin() + static_cast<std::ptrdiff_t>(base);
    auto last = first + static_cast<std::ptrdiff_t>(len);
    auto it = std::upper_bound(first, last, target);
    std::size_t k = it == last ? len - 1 : static_cast<std::size_t>(it - first);
    auto vals = m->row_values(r);
    while (k > 0 && vals[k] == 0.0) --k;
    while (k + 1 < len && vals[k] == 0.0) ++k;
    return k;
  }
};

void sample_start(const HeterogeneousGraph& graph, const RowSampler& sampler,
                  const SolverConfig& config, Index start, StartWalks& out) {
  auto rng = stream_for(config.rng_seed, graph.catalog()[start].id);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const SparseMatrix& m = graph.transition();
  out.nodes.reserve(config.walks_per_node * 4);
  out.lengths.reserve(config.walks_per_node);
  for (std::size_t w = 0; w < config.walks_per_node; ++w) {
    std::size_t length = 1;
    Index current = start;
    out.nodes.push_back(current);
    for (std::size_t step = 0; step < config.max_walk_length; ++step) {
      if (uniform(rng) >= config.damping) break;
      if (sampler.total[current] <= 0.0) break;
      const std::size_t k = sampler.pick(current, uniform(rng));
      const double p = m.row_values(current)[k];
      current = m.row_indices(current)[k];
      out.nodes.push_back(current);
      out.probs.push_back(p);
      ++length;
    }
    out.lengths.push_back(length);
  }
}

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
  put<std::uint64_t>(out, v.size());
  if (!v.empty()) out.write(reinterpret_cast<const char*>(v.data()), sizeof(T) * v.size());
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::Parse, "truncated walk snapshot");
  }
  return v;
}

template <class T>
std::vector<T> get_vec(std::istream& in, std::uint64_t limit) {
  const auto n = get<std::uint64_t>(in);
  if (n > limit) throw Error(ErrorCode::Parse, "walk snapshot array length out of range");
  std::vector<T> v(n);
  if (n && !in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(T) * n))) {
    throw Error(ErrorCode::Parse, "truncated walk snapshot");
  }
  return v;
}

}  // namespace

WalkStore WalkStore::sample(const HeterogeneousGraph& graph, const SolverConfig& config) {
  config.validate();
  const std::size_t n = graph.size();
  RowSampler sampler(graph.transition());

  std::vector<StartWalks> per_start(n);
  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      sample_start(graph, sampler, config, static_cast<Index>(s), per_start[s]);
    }
  };
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(n, t * chunk);
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  WalkStore s;
  s.item_count_ = n;
  s.walks_per_node_ = config.walks_per_node;
  s.max_walk_length_ = config.max_walk_length;
  s.damping_ = config.damping;
  s.seed_ = config.rng_seed;
  s.dangling_start_.assign(n, 0);
  s.offsets_.reserve(n * config.walks_per_node + 1);
  s.offsets_.push_back(0);
  for (std::size_t st = 0; st < n; ++st) {
    StartWalks& sw = per_start[st];
    s.dangling_start_[st] = sampler.total[st] <= 0.0 ? 1 : 0;
    s.nodes_.insert(s.nodes_.end(), sw.nodes.begin(), sw.nodes.end());
    s.sampled_.insert(s.sampled_.end(), sw.probs.begin(), sw.probs.end());
    for (std::size_t len : sw.lengths) s.offsets_.push_back(s.offsets_.back() + len);
    sw = StartWalks{};
  }
  s.factor_.assign(s.sampled_.size(), 1.0);
  s.rebuild_statistics();
  s.rebuild_index();
  return s;
}

void WalkStore::contributions(std::size_t walk, std::span<const double> factors,
                              std::vector<std::pair<Index, double>>& out) const {
  out.clear();
  auto p = path(walk);
  double weight = 1.0;
  out.emplace_back(p[0], 1.0);
  for (std::size_t k = 1; k < p.size(); ++k) {
    weight *= factors[k - 1];
    out.emplace_back(p[k], weight);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t w = 0;
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (w > 0 && out[w - 1].first == out[r].first) {
      out[w - 1].second += out[r].second;
    } else {
      out[w++] = out[r];
    }
  }
  out.resize(w);
}

void WalkStore::rebuild_statistics() {
  visit_ptr_.assign(item_count_ + 1, 0);
  visit_item_.clear();
  visit_sum_.clear();
  visit_sumsq_.clear();
  std::vector<std::pair<Index, double>> contrib;
  std::vector<std::pair<Index, double>> all;  // (item, per-walk count) for one start
  for (std::size_t st = 0; st < item_count_; ++st) {
    all.clear();
    for (std::size_t w = st * walks_per_node_; w < (st + 1) * walks_per_node_; ++w) {
      contributions(w, step_factor(w), contrib);
      all.insert(all.end(), contrib.begin(), contrib.end());
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < all.size();) {
      const Index item = all[k].first;
      double sum = 0.0, sumsq = 0.0;
      for (; k < all.size() && all[k].first == item; ++k) {
        sum += all[k].second;
        sumsq += all[k].second * all[k].second;
      }
      visit_item_.push_back(item);
      visit_sum_.push_back(sum);
      visit_sumsq_.push_back(sumsq);
    }
    visit_ptr_[st + 1] = visit_item_.size();
  }
}

void WalkStore::rebuild_index() {
  index_.clear();
  for (std::size_t w = 0; w < walk_count(); ++w) {
    auto p = path(w);
    for (std::size_t k = 1; k < p.size(); ++k) {
      auto& list = index_[edge_key(p[k - 1], p[k])];
      if (list.empty() || list.back() != w) list.push_back(static_cast<std::uint32_t>(w));
    }
  }
}

std::size_t WalkStore::visit_slot(Index from, Index to) const {
  auto first = visit_item_.begin() + static_cast<std::ptrdiff_t>(visit_ptr_[from]);
  auto last = visit_item_.begin() + static_cast<std::ptrdiff_t>(visit_ptr_[from + 1]);
  auto it = std::lower_bound(first, last, to);
  if (it == last || *it != to) return kNoSlot;
  return static_cast<std::size_t>(it - visit_item_.begin());
}

double WalkStore::variance_at(Index from, std::size_t k, VarianceModel model) const {
  if (dangling_start_[from]) return 0.0;
  if (model == VarianceModel::Poisson) return mean_at(k);
  const double n = static_cast<double>(walks_per_node_);
  if (walks_per_node_ < 2) return 0.0;
  const double var = (visit_sumsq_[k] - visit_sum_[k] * visit_sum_[k] / n) / (n - 1.0);
  return std::max(var, 0.0);
}

double WalkStore::visit_mean(Index from, Index to) const {
  const std::size_t k = visit_slot(from, to);
  return k == kNoSlot ? 0.0 : mean_at(k);
}

double WalkStore::visit_variance(Index from, Index to, VarianceModel model) const {
  const std::size_t k = visit_slot(from, to);
  return k == kNoSlot ? 0.0 : variance_at(from, k, model);
}

std::span<const std::uint32_t> WalkStore::walks_through(Index from, Index to) const {
  auto it = index_.find(edge_key(from, to));
  if (it == index_.end()) return {};
  return it->second;
}

WalkStore::ReweightStats WalkStore::reweight(std::span<const std::uint32_t> walks,
                                             const HeterogeneousGraph& graph) {
  if (graph.size() != item_count_) {
    throw Error(ErrorCode::InvalidArgument, "graph does not match the walk store");
  }
  ReweightStats stats;
  std::vector<std::pair<Index, double>> before, after;
  for (std::uint32_t w : walks) {
    if (w >= walk_count()) throw Error(ErrorCode::OutOfRange, "walk id out of range");
    auto p = path(w);
    std::span<double> factors{factor_.data() + step_offset(w), p.size() - 1};
    auto sampled = sampled_probability(w);
    contributions(w, factors, before);
    for (std::size_t k = 0; k < factors.size(); ++k) {
      factors[k] = graph.transition_prob(p[k], p[k + 1]) / sampled[k];
    }
    contributions(w, factors, after);
    const Index st = start(w);
    for (std::size_t q = 0; q < after.size(); ++q) {
      const std::size_t slot = visit_slot(st, after[q].first);
      const double old_c = before[q].second, new_c = after[q].second;
      visit_sum_[slot] += new_c - old_c;
      visit_sumsq_[slot] += new_c * new_c - old_c * old_c;
    }
    ++stats.walks;
    stats.steps += factors.size();
  }
  return stats;
}

void WalkStore::write_snapshot(std::ostream& out) const {
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, 0);  // flags
  put<std::uint64_t>(out, item_count_);
  put<std::uint64_t>(out, walks_per_node_);
  put<std::uint64_t>(out, max_walk_length_);
  put<double>(out, damping_);
  put<std::uint64_t>(out, seed_);
  std::vector<std::uint64_t> offsets(offsets_.begin(), offsets_.end());
  put_vec(out, offsets);
  put_vec(out, nodes_);
  put_vec(out, sampled_);
  put_vec(out, factor_);
  put_vec(out, dangling_start_);
  std::vector<std::uint64_t> vptr(visit_ptr_.begin(), visit_ptr_.end());
  put_vec(out, vptr);
  put_vec(out, visit_item_);
  put_vec(out, visit_sum_);
  put_vec(out, visit_sumsq_);
  if (!out) throw Error(ErrorCode::Io, "failed to write walk snapshot");
}

WalkStore WalkStore::read_snapshot(std::istream& in) {
  char magic[sizeof kSnapshotMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::Parse, "not a walk snapshot");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kSnapshotVersion) {
    throw Error(ErrorCode::Parse, "unsupported walk snapshot version " + std::to_string(version));
  }
  (void)get<std::uint32_t>(in);
  WalkStore s;
  s.item_count_ = get<std::uint64_t>(in);
  s.walks_per_node_ = get<std::uint64_t>(in);
  s.max_walk_length_ = get<std::uint64_t>(in);
  s.damping_ = get<double>(in);
  s.seed_ = get<std::uint64_t>(in);
  constexpr std::uint64_t kLimit = 1ULL << 36;
  auto offsets = get_vec<std::uint64_t>(in, kLimit);
  s.offsets_.assign(offsets.begin(), offsets.end());
  s.nodes_ = get_vec<Index>(in, kLimit);
  s.sampled_ = get_vec<double>(in, kLimit);
  s.factor_ = get_vec<double>(in, kLimit);
  s.dangling_start_ = get_vec<std::uint8_t>(in, kLimit);
  auto vptr = get_vec<std::uint64_t>(in, kLimit);
  s.visit_ptr_.assign(vptr.begin(), vptr.end());
  s.visit_item_ = get_vec<Index>(in, kLimit);
  s.visit_sum_ = get_vec<double>(in, kLimit);
  s.visit_sumsq_ = get_vec<double>(in, kLimit);

  const std::size_t walks = s.item_count_ * s.walks_per_node_;
  bool ok = s.walks_per_node_ > 0 && s.offsets_.size() == walks + 1 && s.offsets_.front() == 0 &&
            s.offsets_.back() == s.nodes_.size() && s.sampled_.size() + walks == s.nodes_.size() &&
            s.factor_.size() == s.sampled_.size() && s.dangling_start_.size() == s.item_count_ &&
            s.visit_ptr_.size() == s.item_count_ + 1 &&
            s.visit_ptr_.back() == s.visit_item_.size() &&
            s.visit_sum_.size() == s.visit_item_.size() &&
            s.visit_sumsq_.size() == s.visit_item_.size();
  for (std::size_t w = 0; ok && w < walks; ++w) ok = s.offsets_[w] < s.offsets_[w + 1];
  for (Index v : s.nodes_) ok = ok && v < s.item_count_;
  for (Index v : s.visit_item_) ok = ok && v < s.item_count_;
  if (!ok) throw Error(ErrorCode::Parse, "inconsistent walk snapshot");
  s.rebuild_index();
  return s;
}

RankingState scores_from_walks(const WalkStore& store, std::span<const double> priors,
                               const SolverConfig& config) {
  if (priors.size() != store.item_count()) {
    throw Error(ErrorCode::InvalidArgument, "prior vector does not match the walk store");
  }
  const double d = store.damping();
  RankingState s;
  s.score.assign(store.item_count(), 0.0);
  s.variance.assign(store.item_count(), 0.0);
  s.has_variance = true;
  for (Index i = 0; i < store.item_count(); ++i) {
    const double w = priors[i];
    if (w == 0.0) continue;
    store.for_each_visit(i, config.variance, [&](Index j, double mean, double var) {
      s.score[j] += w * mean;
      s.variance[j] += w * w * var;
    });
  }
  for (std::size_t j = 0; j < s.score.size(); ++j) {
    s.score[j] *= (1.0 - d);
    s.variance[j] *= (1.0 - d) * (1.0 - d);
  }
  return s;
}

}  // namespace mrgrank
