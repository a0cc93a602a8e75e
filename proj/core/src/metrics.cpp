#include "fedsense/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace fedsense {

void AccuracyTrace::append(double avg_accuracy) {
  if (!(avg_accuracy >= 0.0 && avg_accuracy <= 1.0)) {
    throw std::out_of_range("average accuracy must lie in [0, 1]");
  }
  average_.push_back(avg_accuracy);
  best_.push_back(best_.empty() ? avg_accuracy : std::max(best_.back(), avg_accuracy));
}

std::optional<int> check_convergence(const AccuracyTrace& trace,
                                     const ConvergenceConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (cfg.window < 1) throw std::invalid_argument("window must be >= 1");
  // best is non-decreasing, so max over j in 1..window of best(t+j) is
  // best(t+window); the whole window check reduces to one comparison.
  for (int t = 1; t + cfg.window <= trace.size(); ++t) {
    if (trace.best(t + cfg.window) - trace.best(t) < cfg.epsilon) {
      return t;
    }
  }
  return std::nullopt;
}

void record_overhead(OverheadReport& report, int round_broadcasts, long long packet_bytes) {
  if (round_broadcasts < 0) throw std::invalid_argument("negative broadcast count");
  report.total_broadcasts += round_broadcasts;
  report.bytes_transmitted += static_cast<long long>(round_broadcasts) * packet_bytes;
  report.energy_proxy += static_cast<double>(round_broadcasts);
}

}  // namespace fedsense
