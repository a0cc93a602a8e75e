#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedsense/config.hpp"
#include "fedsense/executor.hpp"
#include "fedsense/metrics.hpp"
#include "fedsense/nn.hpp"
#include "fedsense/topology.hpp"

namespace fedsense {

struct SensorState {
  int id = 0;
  ModelParams model;
  OptimizerState optimizer;
  std::vector<FeatureSample> train_data;
  std::vector<FeatureSample> test_data;
};

struct RoundOutcome {
  int round = 0;  // 0 is the pre-training evaluation of the initial models
  std::vector<int> received_counts;
  std::vector<double> sensor_accuracies;
  double average_accuracy = 0.0;
  int broadcasts = 0;
  std::vector<std::uint8_t> broadcast_flags;  // which sensors broadcast
};

/// Element-wise mean of {own} and the received models, uniform weights.
/// Received order: models are summed in list order. Throws
/// std::invalid_argument on any shape mismatch.
ModelParams federated_average(const ModelParams& own, std::span<const ModelParams> received);

/// One synchronized round: every sensor trains locally, broadcasts with
/// probability link.broadcast_prob (each directed delivery then lost with
/// probability link.packet_loss_prob), and averages what it received with
/// its own model. Training happens on a barrier: aggregation sees this
/// round's post-training models only. Per-sensor work is dispatched through
/// the executor; all randomness is pre-drawn from streams keyed by
/// (master_seed, round, sensor), so any thread count gives identical
/// results.
RoundOutcome run_round(std::vector<SensorState>& sensors, const Topology& topology,
                       const LinkModel& link, const TrainConfig& cfg,
                       const Eigen::MatrixXd& global_test_features,
                       std::span<const int> global_test_labels, int round,
                       std::uint64_t master_seed, const Executor& executor);

/// Convenience overload matching the natural call signature.
RoundOutcome run_round(std::vector<SensorState>& sensors, const Topology& topology,
                       const LinkModel& link, const TrainConfig& cfg,
                       std::span<const FeatureSample> global_test, int round,
                       std::uint64_t master_seed, const Executor& executor);

struct SimResult {
  Topology topology;
  std::vector<RoundOutcome> rounds;  // rounds[0] is the initial evaluation
  AccuracyTrace trace;               // update rounds 1..n only
  std::optional<int> converged_at;   // anchor round per the epsilon/window rule
  double best_accuracy = 0.0;
  OverheadReport overhead;
  std::vector<SensorState> sensors;  // final state, models included
};

/// Full distributed run: build the topology, synthesize per-sensor data,
/// initialize independent random models, iterate rounds until the
/// convergence rule fires or max_rounds is exhausted. Pure function of the
/// config (master_seed included).
SimResult run_simulation(const SimConfig& cfg, const Executor& executor);

/// Conventional client-server reference: each round all sensors train,
/// one global average is formed, and every sensor adopts it.
SimResult run_centralized_baseline(const SimConfig& cfg, const Executor& executor);

/// The pooled test set (every sensor's held-out split, in sensor order).
std::vector<FeatureSample> global_test_set(const std::vector<SensorState>& sensors);

/// Resolve a TopologySpec: fixed builders, a seeded random layout, or a
/// JSON import.
Topology build_topology(const TopologySpec& spec, std::uint64_t master_seed);

}  // namespace fedsense
