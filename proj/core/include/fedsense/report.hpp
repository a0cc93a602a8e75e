#pragma once

#include <filesystem>
#include <string>

#include "fedsense/protocol.hpp"

namespace fedsense {

/// Columns: round, avg_accuracy, best_accuracy, broadcasts, received_total.
/// Row 0 is the pre-training evaluation; its best column shows its own
/// value since the best-average statistic is defined over update rounds.
std::string metrics_csv(const SimResult& result);
void write_metrics_csv(const std::filesystem::path& path, const SimResult& result);

/// {converged_at, converged_at_plus_window, best_accuracy, rounds,
///  total_broadcasts, bytes_transmitted, energy_proxy, sensors}
std::string summary_json(const SimResult& result, const ConvergenceConfig& convergence);
void write_summary_json(const std::filesystem::path& path, const SimResult& result,
                        const ConvergenceConfig& convergence);

}  // namespace fedsense
