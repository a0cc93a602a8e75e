#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsense/executor.hpp"
#include "fedsense/protocol.hpp"

namespace fedsense {

/// One factor level of a suite, aggregated over master seeds.
struct SuiteCell {
  std::string factor;
  std::vector<double> best_accuracies;   // per seed
  std::vector<int> convergence_rounds;   // anchor round; max_rounds when not converged
  std::vector<bool> converged;           // whether the rule fired at all
  std::vector<long long> broadcast_totals;
  std::vector<int> rounds_run;
  std::vector<double> initial_accuracies;  // round-0 evaluation of the random models

  double mean_best = 0.0;
  double sd_best = 0.0;
  double mean_time = 0.0;
  double sd_time = 0.0;
};

struct SuiteResult {
  std::string name;
  std::string factor_label;
  std::vector<SuiteCell> cells;
};

/// Distributed runs over {line, ring, star, grid, random}; every other
/// field of base is held fixed, seeds vary per cell entry.
SuiteResult run_topology_suite(const SimConfig& base, std::span<const std::uint64_t> seeds,
                               const Executor& executor);

/// Random topology, packet_loss_prob in {0, 0.05, 0.20, 0.50}.
SuiteResult run_loss_suite(const SimConfig& base, std::span<const std::uint64_t> seeds,
                           const Executor& executor);

/// Random topology, broadcast_prob in {1.0, 0.5, 0.25, 0.10}.
SuiteResult run_broadcast_suite(const SimConfig& base, std::span<const std::uint64_t> seeds,
                                const Executor& executor);

std::string suite_to_markdown(const SuiteResult& suite);
std::string suite_to_csv(const SuiteResult& suite);
/// Per-(factor, seed) rows, for plotting and debugging.
std::string suite_details_to_csv(const SuiteResult& suite, std::span<const std::uint64_t> seeds);

inline const std::vector<double> kLossLevels{0.0, 0.05, 0.20, 0.50};
inline const std::vector<double> kBroadcastLevels{1.0, 0.5, 0.25, 0.10};

}  // namespace fedsense
