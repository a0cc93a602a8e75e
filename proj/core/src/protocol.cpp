#include "fedsense/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fedsense/model_io.hpp"

namespace fedsense {

namespace {

std::uint64_t round_sensor_key(int round, int sensor) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(round)) << 32) |
         static_cast<std::uint32_t>(sensor);
}

void check_same_shapes(const ModelParams& a, const ModelParams& b) {
  if (a.layers.size() != b.layers.size()) {
    throw std::invalid_argument("cannot average models with different layer counts");
  }
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].weights.rows() != b.layers[l].weights.rows() ||
        a.layers[l].weights.cols() != b.layers[l].weights.cols() ||
        a.layers[l].biases.size() != b.layers[l].biases.size()) {
      throw std::invalid_argument("cannot average models with mismatched layer shapes");
    }
  }
}

std::vector<SensorState> make_sensors(const SimConfig& cfg, const Topology& topology,
                                      const Executor& executor) {
  std::vector<SensorState> sensors(static_cast<std::size_t>(topology.size()));
  executor.parallel_for(topology.size(), [&](int i) {
    auto& sensor = sensors[static_cast<std::size_t>(i)];
    sensor.id = i;

    Rng data_rng(derive_seed(cfg.master_seed, Stream::kDataset, static_cast<std::uint64_t>(i)));
    std::vector<FeatureSample> samples = generate_sensor_dataset(
        topology.positions[static_cast<std::size_t>(i)], cfg.channel,
        cfg.dataset.samples_per_sensor, cfg.dataset.target_fraction, data_rng);

    auto n_train = static_cast<std::size_t>(
        std::lround(cfg.dataset.train_fraction * static_cast<double>(samples.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, samples.size() - 1);
    sensor.train_data.assign(samples.begin(), samples.begin() + static_cast<long>(n_train));
    sensor.test_data.assign(samples.begin() + static_cast<long>(n_train), samples.end());

    Rng init_rng(derive_seed(cfg.master_seed, Stream::kModelInit, static_cast<std::uint64_t>(i)));
    sensor.model = init_model(init_rng);
    sensor.optimizer = init_optimizer(sensor.model);
  });
  return sensors;
}

RoundOutcome evaluate_all(const std::vector<SensorState>& sensors,
                          const Eigen::MatrixXd& test_features,
                          std::span<const int> test_labels, int round,
                          const Executor& executor) {
  RoundOutcome outcome;
  outcome.round = round;
  outcome.received_counts.assign(sensors.size(), 0);
  outcome.broadcast_flags.assign(sensors.size(), 0);
  outcome.sensor_accuracies.assign(sensors.size(), 0.0);
  executor.parallel_for(static_cast<int>(sensors.size()), [&](int i) {
    outcome.sensor_accuracies[static_cast<std::size_t>(i)] =
        evaluate_packed(sensors[static_cast<std::size_t>(i)].model, test_features, test_labels);
  });
  double sum = 0.0;
  for (double a : outcome.sensor_accuracies) sum += a;
  outcome.average_accuracy = sum / static_cast<double>(sensors.size());
  return outcome;
}

}  // namespace

Topology build_topology(const TopologySpec& spec, std::uint64_t master_seed) {
  if (spec.import_path) {
    std::ifstream in(*spec.import_path);
    if (!in) throw std::runtime_error("cannot open topology file " + *spec.import_path);
    nlohmann::json doc;
    in >> doc;
    return topology_from_json(doc);
  }
  switch (spec.kind) {
    case TopologyKind::kLine: return build_line();
    case TopologyKind::kRing: return build_ring();
    case TopologyKind::kStar: return build_star();
    case TopologyKind::kGrid: return build_grid();
    case TopologyKind::kRandom: {
      Rng rng(derive_seed(master_seed, Stream::kTopology));
      return build_random(spec.random_sensors, spec.area, spec.comm_range, rng);
    }
  }
  throw std::invalid_argument("unknown topology kind");
}

ModelParams federated_average(const ModelParams& own, std::span<const ModelParams> received) {
  for (const ModelParams& other : received) check_same_shapes(own, other);
  ModelParams mean = own;
  for (const ModelParams& other : received) {
    for (std::size_t l = 0; l < mean.layers.size(); ++l) {
      mean.layers[l].weights += other.layers[l].weights;
      mean.layers[l].biases += other.layers[l].biases;
    }
  }
  const double scale = 1.0 / static_cast<double>(received.size() + 1);
  for (auto& layer : mean.layers) {
    layer.weights *= scale;
    layer.biases *= scale;
  }
  return mean;
}

RoundOutcome run_round(std::vector<SensorState>& sensors, const Topology& topology,
                       const LinkModel& link, const TrainConfig& cfg,
                       const Eigen::MatrixXd& global_test_features,
                       std::span<const int> global_test_labels, int round,
                       std::uint64_t master_seed, const Executor& executor) {
  const int n = static_cast<int>(sensors.size());
  if (n != topology.size()) {
    throw std::invalid_argument("sensor count does not match topology size");
  }

  // All link randomness is drawn serially up front, in (sender, neighbor)
  // order, so the heavy per-sensor work below can run on any thread count
  // without perturbing the stream.
  Rng link_rng(derive_seed(master_seed, Stream::kLinkEvents,
                           static_cast<std::uint64_t>(static_cast<std::uint32_t>(round))));
  std::vector<std::uint8_t> broadcasts(sensors.size(), 0);
  for (auto& flag : broadcasts) flag = link_rng.bernoulli(link.broadcast_prob) ? 1 : 0;
  std::vector<std::vector<int>> received_from(sensors.size());
  for (int a = 0; a < n; ++a) {
    if (!broadcasts[static_cast<std::size_t>(a)]) continue;
    for (int b : topology.adjacency[static_cast<std::size_t>(a)]) {
      bool lost = link_rng.bernoulli(link.packet_loss_prob);
      if (!lost) received_from[static_cast<std::size_t>(b)].push_back(a);
    }
  }
  // Deliveries arrive sorted by sender id, giving a fixed summation order.
  for (auto& senders : received_from) std::sort(senders.begin(), senders.end());

  // Step 1: local training (barrier before any aggregation).
  executor.parallel_for(n, [&](int i) {
    Rng train_rng(derive_seed(master_seed, Stream::kTraining, round_sensor_key(round, i)));
    auto& sensor = sensors[static_cast<std::size_t>(i)];
    train_local(sensor.model, sensor.optimizer, sensor.train_data, cfg, train_rng);
  });

  // Steps 2 + 3: exchange and federated averaging over this round's
  // post-training models.
  std::vector<ModelParams> aggregated(sensors.size());
  executor.parallel_for(n, [&](int i) {
    std::vector<ModelParams> received;
    received.reserve(received_from[static_cast<std::size_t>(i)].size());
    for (int sender : received_from[static_cast<std::size_t>(i)]) {
      received.push_back(sensors[static_cast<std::size_t>(sender)].model);
    }
    aggregated[static_cast<std::size_t>(i)] =
        federated_average(sensors[static_cast<std::size_t>(i)].model, received);
  });
  for (int i = 0; i < n; ++i) {
    sensors[static_cast<std::size_t>(i)].model = std::move(aggregated[static_cast<std::size_t>(i)]);
  }

  RoundOutcome outcome =
      evaluate_all(sensors, global_test_features, global_test_labels, round, executor);
  outcome.broadcast_flags = std::move(broadcasts);
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    outcome.received_counts[i] = static_cast<int>(received_from[i].size());
    outcome.broadcasts += outcome.broadcast_flags[i];
  }
  return outcome;
}

RoundOutcome run_round(std::vector<SensorState>& sensors, const Topology& topology,
                       const LinkModel& link, const TrainConfig& cfg,
                       std::span<const FeatureSample> global_test, int round,
                       std::uint64_t master_seed, const Executor& executor) {
  auto [features, labels] = pack_batch(global_test);
  return run_round(sensors, topology, link, cfg, features, labels, round, master_seed,
                   executor);
}

std::vector<FeatureSample> global_test_set(const std::vector<SensorState>& sensors) {
  std::vector<FeatureSample> pooled;
  for (const SensorState& s : sensors) {
    pooled.insert(pooled.end(), s.test_data.begin(), s.test_data.end());
  }
  return pooled;
}

SimResult run_simulation(const SimConfig& cfg, const Executor& executor) {
  validate(cfg);
  SimResult result;
  result.topology = build_topology(cfg.topology, cfg.master_seed);
  if (!is_connected(result.topology)) {
    throw std::invalid_argument("topology is not connected");
  }
  result.sensors = make_sensors(cfg, result.topology, executor);
  result.overhead.per_sensor_broadcasts.assign(result.sensors.size(), 0);

  auto [test_features, test_labels] = pack_batch(global_test_set(result.sensors));

  result.rounds.push_back(
      evaluate_all(result.sensors, test_features, test_labels, 0, executor));

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    RoundOutcome outcome = run_round(result.sensors, result.topology, cfg.link, cfg.train,
                                     test_features, test_labels, round, cfg.master_seed,
                                     executor);
    result.trace.append(outcome.average_accuracy);
    record_overhead(result.overhead, outcome.broadcasts, kModelPacketBytes);
    for (std::size_t i = 0; i < result.sensors.size(); ++i) {
      result.overhead.per_sensor_broadcasts[i] += outcome.broadcast_flags[i];
    }
    result.rounds.push_back(std::move(outcome));

    result.converged_at = check_convergence(result.trace, cfg.convergence);
    if (result.converged_at) break;
  }
  result.best_accuracy = result.trace.latest_best();
  return result;
}

SimResult run_centralized_baseline(const SimConfig& cfg, const Executor& executor) {
  validate(cfg);
  SimResult result;
  result.topology = build_topology(cfg.topology, cfg.master_seed);
  if (!is_connected(result.topology)) {
    throw std::invalid_argument("topology is not connected");
  }
  result.sensors = make_sensors(cfg, result.topology, executor);
  result.overhead.per_sensor_broadcasts.assign(result.sensors.size(), 0);

  auto [test_features, test_labels] = pack_batch(global_test_set(result.sensors));
  const int n = static_cast<int>(result.sensors.size());

  result.rounds.push_back(
      evaluate_all(result.sensors, test_features, test_labels, 0, executor));

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    executor.parallel_for(n, [&](int i) {
      Rng train_rng(derive_seed(cfg.master_seed, Stream::kTraining, round_sensor_key(round, i)));
      auto& sensor = result.sensors[static_cast<std::size_t>(i)];
      train_local(sensor.model, sensor.optimizer, sensor.train_data, cfg.train, train_rng);
    });

    // Server step: one global average; every client adopts it.
    std::vector<ModelParams> rest;
    rest.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 1; i < n; ++i) {
      rest.push_back(result.sensors[static_cast<std::size_t>(i)].model);
    }
    ModelParams global = federated_average(result.sensors.front().model, rest);
    for (auto& sensor : result.sensors) sensor.model = global;

    RoundOutcome outcome =
        evaluate_all(result.sensors, test_features, test_labels, round, executor);
    outcome.broadcasts = n;
    outcome.broadcast_flags.assign(result.sensors.size(), 1);
    for (auto& c : outcome.received_counts) c = n - 1;

    result.trace.append(outcome.average_accuracy);
    record_overhead(result.overhead, outcome.broadcasts, kModelPacketBytes);
    for (std::size_t i = 0; i < result.sensors.size(); ++i) {
      result.overhead.per_sensor_broadcasts[i] += 1;
    }
    result.rounds.push_back(std::move(outcome));

    result.converged_at = check_convergence(result.trace, cfg.convergence);
    if (result.converged_at) break;
  }
  result.best_accuracy = result.trace.latest_best();
  return result;
}

}  // namespace fedsense
