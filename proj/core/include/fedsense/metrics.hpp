#pragma once

#include <optional>
#include <vector>

namespace fedsense {

/// Convergence rule: stop once the best average accuracy has not improved
/// by epsilon for window consecutive rounds.
struct ConvergenceConfig {
  double epsilon = 0.01;
  int window = 100;

  friend bool operator==(const ConvergenceConfig&, const ConvergenceConfig&) = default;
};

/// Per-round average accuracies with their running maximum. Entries are
/// 1-based rounds: entry t is round t, t = 1..size().
class AccuracyTrace {
 public:
  /// Append a round's average accuracy. Throws std::out_of_range unless
  /// the value lies in [0, 1].
  void append(double avg_accuracy);

  int size() const { return static_cast<int>(average_.size()); }
  bool empty() const { return average_.empty(); }

  double average(int round) const { return average_.at(static_cast<std::size_t>(round - 1)); }
  /// best(t) = max of average accuracies over rounds 1..t.
  double best(int round) const { return best_.at(static_cast<std::size_t>(round - 1)); }
  double latest_best() const { return best_.back(); }

 private:
  std::vector<double> average_;
  std::vector<double> best_;
};

/// Smallest round t whose best accuracy the following cfg.window rounds
/// never beat by cfg.epsilon or more, i.e. best(t+j) - best(t) < epsilon
/// for all j in 1..window. Requires round t+window to exist; returns
/// nullopt while the trace is too short or still improving.
std::optional<int> check_convergence(const AccuracyTrace& trace,
                                     const ConvergenceConfig& cfg);

/// Communication cost accounting; one broadcast costs one energy unit.
struct OverheadReport {
  long long total_broadcasts = 0;
  std::vector<long long> per_sensor_broadcasts;
  long long bytes_transmitted = 0;
  double energy_proxy = 0.0;
};

void record_overhead(OverheadReport& report, int round_broadcasts, long long packet_bytes);

}  // namespace fedsense
