#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "fedsense/metrics.hpp"
#include "fedsense/nn.hpp"
#include "fedsense/signal.hpp"
#include "fedsense/topology.hpp"

namespace fedsense {

struct DatasetConfig {
  int samples_per_sensor = 1000;
  double target_fraction = 0.5;
  double train_fraction = 0.8;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct LinkModel {
  double packet_loss_prob = 0.0;  // per directed link, per round
  double broadcast_prob = 1.0;    // per sensor, per round

  friend bool operator==(const LinkModel&, const LinkModel&) = default;
};

struct TopologySpec {
  TopologyKind kind = TopologyKind::kGrid;
  int random_sensors = 20;
  Rect area;
  double comm_range = kDefaultCommRange;
  std::optional<std::string> import_path;  // JSON file overriding the builders

  friend bool operator==(const TopologySpec&, const TopologySpec&) = default;
};

/// Full experiment description; a simulation is a pure function of this.
struct SimConfig {
  TopologySpec topology;
  ChannelParams channel;
  DatasetConfig dataset;
  TrainConfig train;
  LinkModel link;
  ConvergenceConfig convergence;
  int max_rounds = 2000;
  std::uint64_t master_seed = 1;
  std::string output_dir;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Validate invariants (probabilities in range, positive counts, ...).
/// Throws std::invalid_argument with a field name on violation.
void validate(const SimConfig& cfg);

nlohmann::json config_to_json(const SimConfig& cfg);
SimConfig config_from_json(const nlohmann::json& doc);

SimConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const SimConfig& cfg);

}  // namespace fedsense
