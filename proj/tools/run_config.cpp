#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace superpart::cli {

namespace {

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInputError("'" + key + "' must be true or false, got '" + v + "'");
}

std::uint64_t parse_seed(const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw InvalidInputError("seed must be an unsigned 64-bit integer, got '" + v + "'");
  }
  return out;
}

std::size_t get_count(const KeyValueSection& s, const std::string& key, std::size_t fallback) {
  const long long v = s.get_int(key, static_cast<long long>(fallback));
  if (v < 0) throw InvalidInputError("'" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"seed", "threads", "format"}},
      {"voxel", {"size"}},
      {"graph", {"k"}},
      {"features", {"k", "channels", "normalize"}},
      {"transition", {"tau", "rho_intra"}},
      {"fit", {"out_dim", "steps", "lr"}},
      {"partition", {"lambda", "min_sizes", "knn_reconnect"}},
      {"bench", {"points", "repeats"}},
  };
  return keys;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = seed ^ h;
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void RunConfig::validate() const {
  if (threads < 0) throw InvalidInputError("thread count must be >= 0");
  if (!(voxel_size >= 0.0) || !std::isfinite(voxel_size)) {
    throw InvalidInputError("voxel size must be finite and >= 0 (0 disables subsampling)");
  }
  if (voxel_size > 0.0) VoxelGridSpec{voxel_size}.validate();
  if (graph.k < 1) throw InvalidInputError("graph k must be >= 1");
  features.validate();
  transition.validate();
  if (fit.out_dim == 0) throw InvalidInputError("fit out_dim must be >= 1");
  if (min_sizes.empty()) throw InvalidInputError("at least one partition level is required");
  for (const PartitionConfig& c : level_configs()) c.validate();
  if (bench_points < 2) throw InvalidInputError("bench needs at least 2 points");
  if (repeats < 1) throw InvalidInputError("bench repeats must be >= 1");
}

std::vector<PartitionConfig> RunConfig::level_configs() const {
  std::vector<PartitionConfig> levels;
  for (std::size_t l = 0; l < min_sizes.size(); ++l) {
    PartitionConfig c;
    c.lambda = lambda;
    c.min_size = min_sizes[l];
    c.knn_reconnect = knn_reconnect;
    c.seed = derive_seed(seed, "partition.level" + std::to_string(l));
    levels.push_back(c);
  }
  return levels;
}

FeatureChannels parse_channels(const std::string& list) {
  if (list == "all") return {};
  FeatureChannels c{false, false, false, false, false, false, false};
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t end = std::min(list.find(',', start), list.size());
    std::string name = list.substr(start, end - start);
    name.erase(0, name.find_first_not_of(' '));
    name.erase(name.find_last_not_of(' ') + 1);
    if (name == "linearity") c.linearity = true;
    else if (name == "planarity") c.planarity = true;
    else if (name == "scattering") c.scattering = true;
    else if (name == "verticality") c.verticality = true;
    else if (name == "elevation") c.elevation = true;
    else if (name == "color") c.color = true;
    else if (name == "intensity") c.intensity = true;
    else throw InvalidInputError("unknown feature channel '" + name + "'");
    start = end + 1;
  }
  return c;
}

std::string channels_text(const FeatureChannels& c) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(c.linearity, "linearity");
  add(c.planarity, "planarity");
  add(c.scattering, "scattering");
  add(c.verticality, "verticality");
  add(c.elevation, "elevation");
  add(c.color, "color");
  add(c.intensity, "intensity");
  return out;
}

std::vector<std::uint64_t> parse_min_sizes(const std::string& list) {
  std::vector<std::uint64_t> out;
  for (double v : parse_number_list(list)) {
    if (!(v >= 1.0)) throw InvalidInputError("minimum superpoint size (sigma_min) must be >= 1, got " + num(v));
    if (v != std::floor(v) || v > 1e18) throw InvalidInputError("minimum superpoint size must be an integer");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw InvalidInputError("at least one minimum superpoint size is required");
  return out;
}

PartitionFormat parse_format(const std::string& name) {
  if (name == "csv") return PartitionFormat::kCsv;
  if (name == "bin") return PartitionFormat::kBinary;
  throw InvalidInputError("unknown partition format '" + name + "' (expected csv or bin)");
}

void apply_config(const KeyValueDocument& doc, RunConfig& cfg) {
  for (const KeyValueSection& s : doc.sections) {
    const auto known = known_keys().find(s.name);
    if (known == known_keys().end()) {
      throw InvalidInputError("unknown config section [" + s.name + "] at line " + std::to_string(s.line));
    }
    for (const auto& [key, value] : s.entries) {
      if (!known->second.count(key)) {
        throw InvalidInputError("unknown key '" + key + "' in section [" + s.name + "]");
      }
    }
    if (s.name == "run") {
      if (s.has("seed")) cfg.seed = parse_seed(s.get_string("seed"));
      if (s.has("threads")) cfg.threads = static_cast<int>(s.get_int("threads"));
      if (s.has("format")) cfg.format = parse_format(s.get_string("format"));
    } else if (s.name == "voxel") {
      cfg.voxel_size = s.get_double("size", cfg.voxel_size);
    } else if (s.name == "graph") {
      cfg.graph.k = get_count(s, "k", cfg.graph.k);
    } else if (s.name == "features") {
      cfg.features.neighborhood_k = get_count(s, "k", cfg.features.neighborhood_k);
      if (s.has("channels")) cfg.features.channels = parse_channels(s.get_string("channels"));
      if (s.has("normalize")) cfg.features.normalize = parse_bool("normalize", s.get_string("normalize"));
    } else if (s.name == "transition") {
      cfg.transition.tau = s.get_double("tau", cfg.transition.tau);
      cfg.transition.rho_intra = s.get_double("rho_intra", cfg.transition.rho_intra);
    } else if (s.name == "fit") {
      cfg.fit.out_dim = get_count(s, "out_dim", cfg.fit.out_dim);
      cfg.fit.steps = get_count(s, "steps", cfg.fit.steps);
      cfg.fit.lr = s.get_double("lr", cfg.fit.lr);
    } else if (s.name == "partition") {
      cfg.lambda = s.get_double("lambda", cfg.lambda);
      if (s.has("min_sizes")) cfg.min_sizes = parse_min_sizes(s.get_string("min_sizes"));
      cfg.knn_reconnect = get_count(s, "knn_reconnect", cfg.knn_reconnect);
    } else if (s.name == "bench") {
      cfg.bench_points = get_count(s, "points", cfg.bench_points);
      cfg.repeats = get_count(s, "repeats", cfg.repeats);
    }
  }
}

std::string config_text(const RunConfig& cfg) {
  std::string sizes;
  for (std::uint64_t s : cfg.min_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
  std::string out;
  out += "[run]\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += "threads = " + std::to_string(cfg.threads) + "\n";
  out += std::string("format = ") + (cfg.format == PartitionFormat::kCsv ? "csv" : "bin") + "\n";
  out += "\n[voxel]\nsize = " + num(cfg.voxel_size) + "\n";
  out += "\n[graph]\nk = " + std::to_string(cfg.graph.k) + "\n";
  out += "\n[features]\n";
  out += "k = " + std::to_string(cfg.features.neighborhood_k) + "\n";
  out += "channels = " + channels_text(cfg.features.channels) + "\n";
  out += std::string("normalize = ") + (cfg.features.normalize ? "true" : "false") + "\n";
  out += "\n[transition]\n";
  out += "tau = " + num(cfg.transition.tau) + "\n";
  out += "rho_intra = " + num(cfg.transition.rho_intra) + "\n";
  out += "\n[fit]\n";
  out += "out_dim = " + std::to_string(cfg.fit.out_dim) + "\n";
  out += "steps = " + std::to_string(cfg.fit.steps) + "\n";
  out += "lr = " + num(cfg.fit.lr) + "\n";
  out += "\n[partition]\n";
  out += "lambda = " + num(cfg.lambda) + "\n";
  out += "min_sizes = " + sizes + "\n";
  out += "knn_reconnect = " + std::to_string(cfg.knn_reconnect) + "\n";
  out += "\n[bench]\n";
  out += "points = " + std::to_string(cfg.bench_points) + "\n";
  out += "repeats = " + std::to_string(cfg.repeats) + "\n";
  return out;
}

}  // namespace superpart::cli
