#include "fedsense/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace fedsense {

namespace {

void finalize_stats(SuiteCell& cell) {
  const auto n = static_cast<double>(cell.best_accuracies.size());
  if (n == 0) return;
  double sum_best = 0.0;
  double sum_time = 0.0;
  for (std::size_t k = 0; k < cell.best_accuracies.size(); ++k) {
    sum_best += cell.best_accuracies[k];
    sum_time += cell.convergence_rounds[k];
  }
  cell.mean_best = sum_best / n;
  cell.mean_time = sum_time / n;
  if (n > 1) {
    double var_best = 0.0;
    double var_time = 0.0;
    for (std::size_t k = 0; k < cell.best_accuracies.size(); ++k) {
      var_best += (cell.best_accuracies[k] - cell.mean_best) *
                  (cell.best_accuracies[k] - cell.mean_best);
      var_time += (cell.convergence_rounds[k] - cell.mean_time) *
                  (cell.convergence_rounds[k] - cell.mean_time);
    }
    cell.sd_best = std::sqrt(var_best / (n - 1.0));
    cell.sd_time = std::sqrt(var_time / (n - 1.0));
  }
}

SuiteCell run_cell(const SimConfig& cfg, std::string factor,
                   std::span<const std::uint64_t> seeds, const Executor& executor) {
  SuiteCell cell;
  cell.factor = std::move(factor);
  for (std::uint64_t seed : seeds) {
    SimConfig seeded = cfg;
    seeded.master_seed = seed;
    SimResult result = run_simulation(seeded, executor);
    cell.best_accuracies.push_back(result.best_accuracy);
    cell.convergence_rounds.push_back(result.converged_at.value_or(seeded.max_rounds));
    cell.converged.push_back(result.converged_at.has_value());
    cell.broadcast_totals.push_back(result.overhead.total_broadcasts);
    cell.rounds_run.push_back(result.trace.size());
    cell.initial_accuracies.push_back(result.rounds.front().average_accuracy);
  }
  finalize_stats(cell);
  return cell;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

SuiteResult run_topology_suite(const SimConfig& base, std::span<const std::uint64_t> seeds,
                               const Executor& executor) {
  SuiteResult suite;
  suite.name = "topology";
  suite.factor_label = "Topology";
  for (TopologyKind kind : {TopologyKind::kLine, TopologyKind::kRing, TopologyKind::kStar,
                            TopologyKind::kGrid, TopologyKind::kRandom}) {
    SimConfig cfg = base;
    cfg.topology.kind = kind;
    suite.cells.push_back(run_cell(cfg, to_string(kind), seeds, executor));
  }
  return suite;
}

SuiteResult run_loss_suite(const SimConfig& base, std::span<const std::uint64_t> seeds,
                           const Executor& executor) {
  SuiteResult suite;
  suite.name = "loss";
  suite.factor_label = "Loss probability";
  SimConfig cfg = base;
  cfg.topology.kind = TopologyKind::kRandom;
  for (double loss : kLossLevels) {
    SimConfig cell_cfg = cfg;
    cell_cfg.link.packet_loss_prob = loss;
    suite.cells.push_back(run_cell(cell_cfg, format_double(loss), seeds, executor));
  }
  return suite;
}

SuiteResult run_broadcast_suite(const SimConfig& base, std::span<const std::uint64_t> seeds,
                                const Executor& executor) {
  SuiteResult suite;
  suite.name = "broadcast";
  suite.factor_label = "Broadcast probability";
  SimConfig cfg = base;
  cfg.topology.kind = TopologyKind::kRandom;
  for (double prob : kBroadcastLevels) {
    SimConfig cell_cfg = cfg;
    cell_cfg.link.broadcast_prob = prob;
    suite.cells.push_back(run_cell(cell_cfg, format_double(prob), seeds, executor));
  }
  return suite;
}

std::string suite_to_markdown(const SuiteResult& suite) {
  std::ostringstream out;
  out << "| " << suite.factor_label << " | Time | Best average accuracy |\n";
  out << "|---|---|---|\n";
  for (const SuiteCell& cell : suite.cells) {
    char time_buf[64];
    std::snprintf(time_buf, sizeof time_buf, "%.1f ± %.1f", cell.mean_time, cell.sd_time);
    char best_buf[64];
    std::snprintf(best_buf, sizeof best_buf, "%.4f ± %.4f", cell.mean_best, cell.sd_best);
    out << "| " << cell.factor << " | " << time_buf << " | " << best_buf << " |\n";
  }
  return out.str();
}

std::string suite_to_csv(const SuiteResult& suite) {
  std::ostringstream out;
  out << "factor,time_mean,time_stddev,best_accuracy_mean,best_accuracy_stddev\n";
  for (const SuiteCell& cell : suite.cells) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.6f,%.6f\n", cell.factor.c_str(),
                  cell.mean_time, cell.sd_time, cell.mean_best, cell.sd_best);
    out << buf;
  }
  return out.str();
}

std::string suite_details_to_csv(const SuiteResult& suite,
                                 std::span<const std::uint64_t> seeds) {
  std::ostringstream out;
  out << "suite,factor,seed,converged,convergence_round,rounds_run,best_accuracy,"
         "total_broadcasts\n";
  for (const SuiteCell& cell : suite.cells) {
    for (std::size_t k = 0; k < cell.best_accuracies.size(); ++k) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s,%s,%llu,%d,%d,%d,%.6f,%lld\n", suite.name.c_str(),
                    cell.factor.c_str(),
                    static_cast<unsigned long long>(seeds[k]),
                    cell.converged[k] ? 1 : 0, cell.convergence_rounds[k],
                    cell.rounds_run[k], cell.best_accuracies[k], cell.broadcast_totals[k]);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace fedsense
