#include "fedsense/report.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fedsense {

std::string metrics_csv(const SimResult& result) {
  std::ostringstream out;
  out << "round,avg_accuracy,best_accuracy,broadcasts,received_total\n";
  for (const RoundOutcome& r : result.rounds) {
    double best = r.round == 0 ? r.average_accuracy : result.trace.best(r.round);
    long long received_total =
        std::accumulate(r.received_counts.begin(), r.received_counts.end(), 0LL);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d,%lld\n", r.round, r.average_accuracy,
                  best, r.broadcasts, received_total);
    out << buf;
  }
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path, const SimResult& result) {
  std::ofstream out(path, std::ios::binary);
  out << metrics_csv(result);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string summary_json(const SimResult& result, const ConvergenceConfig& convergence) {
  nlohmann::json doc;
  if (result.converged_at) {
    doc["converged_at"] = *result.converged_at;
    doc["converged_at_plus_window"] = *result.converged_at + convergence.window;
  } else {
    doc["converged_at"] = nullptr;
    doc["converged_at_plus_window"] = nullptr;
  }
  doc["best_accuracy"] = result.best_accuracy;
  doc["rounds"] = result.trace.size();
  doc["total_broadcasts"] = result.overhead.total_broadcasts;
  doc["bytes_transmitted"] = result.overhead.bytes_transmitted;
  doc["energy_proxy"] = result.overhead.energy_proxy;
  doc["sensors"] = result.sensors.size();
  return doc.dump(2) + "\n";
}

void write_summary_json(const std::filesystem::path& path, const SimResult& result,
                        const ConvergenceConfig& convergence) {
  std::ofstream out(path, std::ios::binary);
  out << summary_json(result, convergence);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace fedsense
