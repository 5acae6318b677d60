#pragma once

#include "superpart/features.hpp"
#include "superpart/graph.hpp"
#include "superpart/keyvalue.hpp"
#include "superpart/partition.hpp"
#include "superpart/partition_io.hpp"
#include "superpart/transition.hpp"
#include "superpart/voxel.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace superpart::cli {

// Everything a command needs. Defaults are the reference hyperparameters:
// lambda 0.02, 8-NN graph, minimum sizes 5/30/90, tau 1, rho_intra 0.1.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 keeps the OpenMP default

  double voxel_size = 0.03;  // 0 disables subsampling
  GraphConfig graph;
  FeatureConfig features;
  TransitionConfig transition;
  FitConfig fit;

  double lambda = 0.02;
  std::vector<std::uint64_t> min_sizes{5, 30, 90};
  std::size_t knn_reconnect = 8;

  PartitionFormat format = PartitionFormat::kCsv;

  std::size_t bench_points = 1'000'000;
  std::size_t repeats = 3;

  void validate() const;

  // One PartitionConfig per level, each with its own derived seed.
  std::vector<PartitionConfig> level_configs() const;
};

// Independent stream for one module: the run seed mixed with a fixed label.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& label);

// Overwrites the fields present in `doc`. Unknown sections or keys are errors.
void apply_config(const KeyValueDocument& doc, RunConfig& cfg);

// Key/value text that apply_config reads back to the same configuration.
std::string config_text(const RunConfig& cfg);

FeatureChannels parse_channels(const std::string& list);
std::string channels_text(const FeatureChannels& c);

// "5,30,90" -> {5,30,90}; each entry must be an integer >= 1.
std::vector<std::uint64_t> parse_min_sizes(const std::string& list);

PartitionFormat parse_format(const std::string& name);

}  // namespace superpart::cli
