#include "mrgrank/config.hpp"

#include <fstream>

#include "mrgrank/error.hpp"

namespace mrgrank {

using nlohmann::json;

void SolverConfig::validate() const {
  if (!(damping >= 0.0 && damping < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "damping must lie in [0,1)");
  }
  if (walks_per_node == 0) throw Error(ErrorCode::InvalidArgument, "walks_per_node must be >= 1");
  if (max_walk_length == 0) {
    throw Error(ErrorCode::InvalidArgument, "max_walk_length must be >= 1");
  }
  if (!(exact_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be > 0");
}

MixingWeights MixingWeights::defaults() {
  MixingWeights w;
  for (std::size_t from = 0; from < kKindCount; ++from) {
    for (std::size_t to = 0; to < kKindCount; ++to) w.alpha[from][to] = from == to ? 0.5 : 0.25;
  }
  return w;
}

void MixingWeights::validate() const {
  for (const auto& row : alpha) {
    for (double a : row) {
      if (!(a >= 0.0 && a <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "mixing weights must lie in [0,1]");
      }
    }
  }
}

void EngineConfig::validate() const {
  solver.validate();
  alpha.validate();
  if (similarity.threshold < 0.0 || similarity.threshold > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "similarity threshold must lie in [0,1]");
  }
  if (clustering.representatives == 0) {
    throw Error(ErrorCode::InvalidArgument, "representatives must be >= 1");
  }
  if (layout.density_resolution < 2) {
    throw Error(ErrorCode::InvalidArgument, "density_resolution must be >= 2");
  }
  if (flows.spiral_angle_deg <= 0.0 || flows.spiral_angle_deg >= 90.0) {
    throw Error(ErrorCode::InvalidArgument, "spiral angle must lie in (0,90) degrees");
  }
  if (flows.bundle_points < 3) throw Error(ErrorCode::InvalidArgument, "bundle_points must be >= 3");
}

namespace {

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) out = it->get<T>();
}

VarianceModel parse_variance(const std::string& s) {
  if (s == "poisson") return VarianceModel::Poisson;
  if (s == "empirical") return VarianceModel::Empirical;
  throw Error(ErrorCode::InvalidArgument, "unknown variance model '" + s + "'");
}

}  // namespace

EngineConfig parse_config(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "config must be a JSON object");
  EngineConfig c;
  try {
    if (auto s = j.find("solver"); s != j.end()) {
      read(*s, "damping", c.solver.damping);
      read(*s, "walks_per_node", c.solver.walks_per_node);
      read(*s, "max_walk_length", c.solver.max_walk_length);
      read(*s, "rng_seed", c.solver.rng_seed);
      read(*s, "threads", c.solver.threads);
      read(*s, "exact_tolerance", c.solver.exact_tolerance);
      read(*s, "exact_max_iterations", c.solver.exact_max_iterations);
      if (auto v = s->find("variance_model"); v != s->end()) {
        c.solver.variance = parse_variance(v->get<std::string>());
      }
    }
    if (auto a = j.find("alpha"); a != j.end()) {
      for (auto& [from_name, row] : a->items()) {
        auto from = parse_kind(from_name);
        if (!from) throw Error(ErrorCode::Parse, "unknown kind in alpha: " + from_name);
        for (auto& [to_name, value] : row.items()) {
          auto to = parse_kind(to_name);
          if (!to) throw Error(ErrorCode::Parse, "unknown kind in alpha: " + to_name);
          c.alpha.set(*from, *to, value.get<double>());
        }
      }
    }
    if (auto s = j.find("similarity"); s != j.end()) {
      read(*s, "threshold", c.similarity.threshold);
      read(*s, "top_k", c.similarity.top_k);
    }
    if (auto s = j.find("clustering"); s != j.end()) {
      read(*s, "representatives", c.clustering.representatives);
      read(*s, "edge_threshold", c.clustering.edge_threshold);
      read(*s, "default_level", c.clustering.default_level);
    }
    if (auto s = j.find("layout"); s != j.end()) {
      read(*s, "margin", c.layout.margin);
      read(*s, "min_separation", c.layout.min_separation);
      read(*s, "stress_iterations", c.layout.stress_iterations);
      read(*s, "representative_iterations", c.layout.representative_iterations);
      read(*s, "density_resolution", c.layout.density_resolution);
    }
    if (auto s = j.find("flows"); s != j.end()) {
      read(*s, "spiral_angle_deg", c.flows.spiral_angle_deg);
      read(*s, "max_targets", c.flows.max_targets);
      read(*s, "min_join_fraction", c.flows.min_join_fraction);
      read(*s, "spiral_samples", c.flows.spiral_samples);
      read(*s, "bundle_points", c.flows.bundle_points);
      read(*s, "bundle_iterations", c.flows.bundle_iterations);
      read(*s, "bundle_threshold", c.flows.bundle_threshold);
      read(*s, "spring_constant", c.flows.spring_constant);
      read(*s, "initial_step", c.flows.initial_step);
      read(*s, "cooling", c.flows.cooling);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const EngineConfig& c) {
  json alpha = json::object();
  for (ItemKind from : kAllKinds) {
    for (ItemKind to : kAllKinds) {
      alpha[std::string(to_string(from))][std::string(to_string(to))] = c.alpha.at(from, to);
    }
  }
  return {
      {"solver",
       {{"damping", c.solver.damping},
        {"walks_per_node", c.solver.walks_per_node},
        {"max_walk_length", c.solver.max_walk_length},
        {"rng_seed", c.solver.rng_seed},
        {"threads", c.solver.threads},
        {"exact_tolerance", c.solver.exact_tolerance},
        {"exact_max_iterations", c.solver.exact_max_iterations},
        {"variance_model",
         c.solver.variance == VarianceModel::Poisson ? "poisson" : "empirical"}}},
      {"alpha", alpha},
      {"similarity", {{"threshold", c.similarity.threshold}, {"top_k", c.similarity.top_k}}},
      {"clustering",
       {{"representatives", c.clustering.representatives},
        {"edge_threshold", c.clustering.edge_threshold},
        {"default_level", c.clustering.default_level}}},
      {"layout",
       {{"margin", c.layout.margin},
        {"min_separation", c.layout.min_separation},
        {"stress_iterations", c.layout.stress_iterations},
        {"representative_iterations", c.layout.representative_iterations},
        {"density_resolution", c.layout.density_resolution}}},
      {"flows",
       {{"spiral_angle_deg", c.flows.spiral_angle_deg},
        {"max_targets", c.flows.max_targets},
        {"min_join_fraction", c.flows.min_join_fraction},
        {"spiral_samples", c.flows.spiral_samples},
        {"bundle_points", c.flows.bundle_points},
        {"bundle_iterations", c.flows.bundle_iterations},
        {"bundle_threshold", c.flows.bundle_threshold},
        {"spring_constant", c.flows.spring_constant},
        {"initial_step", c.flows.initial_step},
        {"cooling", c.flows.cooling}}},
  };
}

}  // namespace mrgrank
