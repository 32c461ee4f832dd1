#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedbayes/data.hpp"
#include "fedbayes/sim.hpp"

namespace fedbayes {

/// Everything one experiment needs, serialisable to a single JSON file. CLI
/// flags override individual fields after loading.
struct ExperimentConfig {
  std::string dataset_path;
  /// Named client distribution (A-D) or empty when partition carries explicit
  /// rho and kappa.
  std::string distribution;
  RunConfig run;
  PartitionSpec partition;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string out_dir = ".";
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
  std::uint64_t partition_seed = 0;
};

/// Stock hyperparameters per engine (the settings the headline numbers use).
RunConfig engine_defaults(Engine e);

Engine engine_from_name(const std::string& name);
std::string engine_name(Engine e);

/// A: homogeneous. B: rho 0.9, kappa 0.95. C: rho 0.7, kappa -3.
/// D: rho 0.6, kappa -1.5.
void apply_distribution(PartitionSpec& spec, const std::string& name);

std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);
void save_config_file(const ExperimentConfig& cfg, const std::string& path);

/// Shard manifest: sizes, class fractions, privacy deltas, indices.
std::string manifest_json(const Partition& part);

}  // namespace fedbayes
