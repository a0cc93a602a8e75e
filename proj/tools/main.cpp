// fedsense command line: run single simulations, canned experiment suites,
// and dataset generation. See README for the config schema.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedsense/config.hpp"
#include "fedsense/experiments.hpp"
#include "fedsense/model_io.hpp"
#include "fedsense/protocol.hpp"
#include "fedsense/report.hpp"
#include "fedsense/signal.hpp"

namespace fs = std::filesystem;
using namespace fedsense;

namespace {

// 0 success, 2 config/usage error, 3 non-convergence, 4 I/O error.
enum ExitCode { kOk = 0, kConfigError = 2, kNotConverged = 3, kIoError = 4 };

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("FEDSENSE_OUT")) return env;
  return "fedsense-out";
}

SimConfig resolve_config(const CommonOpts& opts) {
  SimConfig cfg;
  if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (!opts.out_dir.empty()) {
    cfg.output_dir = opts.out_dir;
  } else if (cfg.output_dir.empty()) {
    cfg.output_dir = default_out_dir();
  }
  return cfg;
}

Executor make_executor(int threads) {
  if (threads > 0) return Executor(threads);
  unsigned hw = std::thread::hardware_concurrency();
  return Executor(hw == 0 ? 1 : static_cast<int>(hw));
}

int cmd_run(SimConfig cfg, int threads, bool baseline) {
  validate(cfg);
  fs::create_directories(cfg.output_dir);
  save_config(fs::path(cfg.output_dir) / "effective_config.json", cfg);

  Executor executor = make_executor(threads);
  SimResult result =
      baseline ? run_centralized_baseline(cfg, executor) : run_simulation(cfg, executor);

  fs::path out(cfg.output_dir);
  write_metrics_csv(out / "metrics.csv", result);
  write_summary_json(out / "summary.json", result, cfg.convergence);
  {
    std::ofstream topo_out(out / "topology.json");
    topo_out << topology_to_json(result.topology).dump(2) << '\n';
    if (!topo_out) throw std::runtime_error("cannot write topology.json");
  }
  for (const SensorState& sensor : result.sensors) {
    char name[32];
    std::snprintf(name, sizeof name, "model_%02d.bin", sensor.id);
    write_model_binary(out / name, sensor.model);
  }

  if (result.converged_at) {
    std::printf("converged_at=%d best_accuracy=%.4f rounds=%d\n", *result.converged_at,
                result.best_accuracy, result.trace.size());
    return kOk;
  }
  std::printf("not converged within %d rounds; best_accuracy=%.4f\n", cfg.max_rounds,
              result.best_accuracy);
  return kNotConverged;
}

int cmd_suite(const std::string& name, SimConfig base, std::vector<std::uint64_t> seeds,
              int threads) {
  validate(base);
  if (seeds.empty()) seeds = {1, 2, 3, 4, 5};
  Executor executor = make_executor(threads);

  SuiteResult suite;
  if (name == "topology") {
    suite = run_topology_suite(base, seeds, executor);
  } else if (name == "loss") {
    suite = run_loss_suite(base, seeds, executor);
  } else if (name == "broadcast") {
    suite = run_broadcast_suite(base, seeds, executor);
  } else {
    std::fprintf(stderr, "unknown suite '%s' (expected topology, loss or broadcast)\n",
                 name.c_str());
    return kConfigError;
  }

  fs::path out(base.output_dir);
  fs::create_directories(out);
  save_config(out / "effective_config.json", base);
  const std::string md = suite_to_markdown(suite);
  {
    std::ofstream f(out / ("suite_" + name + ".md"), std::ios::binary);
    f << md;
    if (!f) throw std::runtime_error("cannot write suite markdown");
  }
  {
    std::ofstream f(out / ("suite_" + name + ".csv"), std::ios::binary);
    f << suite_to_csv(suite);
    if (!f) throw std::runtime_error("cannot write suite csv");
  }
  {
    std::ofstream f(out / ("suite_" + name + "_details.csv"), std::ios::binary);
    f << suite_details_to_csv(suite, seeds);
    if (!f) throw std::runtime_error("cannot write suite details csv");
  }
  std::fputs(md.c_str(), stdout);
  return kOk;
}

int cmd_gen_data(SimConfig cfg, int threads) {
  validate(cfg);
  fs::path out(cfg.output_dir);
  fs::create_directories(out);
  save_config(out / "effective_config.json", cfg);

  Topology topo = build_topology(cfg.topology, cfg.master_seed);
  {
    std::ofstream topo_out(out / "topology.json");
    topo_out << topology_to_json(topo).dump(2) << '\n';
  }
  Executor executor = make_executor(threads);
  std::vector<std::vector<FeatureSample>> datasets(
      static_cast<std::size_t>(topo.size()));
  executor.parallel_for(topo.size(), [&](int i) {
    // Same per-sensor streams as the simulator, so these files are exactly
    // the data a run with this config trains on.
    Rng rng(derive_seed(cfg.master_seed, Stream::kDataset, static_cast<std::uint64_t>(i)));
    datasets[static_cast<std::size_t>(i)] =
        generate_sensor_dataset(topo.positions[static_cast<std::size_t>(i)], cfg.channel,
                                cfg.dataset.samples_per_sensor,
                                cfg.dataset.target_fraction, rng);
  });
  for (int i = 0; i < topo.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sensor_%02d.csv", i);
    write_dataset_csv(out / name, datasets[static_cast<std::size_t>(i)]);
  }
  std::printf("wrote %d sensor datasets to %s\n", topo.size(), cfg.output_dir.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed federated learning simulator for wireless spectrum sensing"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string topology_name;
  double loss_prob = -1.0;
  double broadcast_prob = -1.0;
  int max_rounds = 0;
  bool baseline = false;
  std::string suite_name;
  std::vector<std::uint64_t> seeds;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--seed", [&opts](const CLI::results_t& res) {
      opts.seed = std::stoull(res.front());
      return true;
    }, "Master seed override");
    cmd->add_option("--out", opts.out_dir, "Output directory (default $FEDSENSE_OUT)");
    cmd->add_option("--threads", opts.threads, "Worker threads (default: hardware)");
  };

  CLI::App* run = app.add_subcommand("run", "Run one simulation");
  add_common(run);
  run->add_option("--topology", topology_name, "line|ring|star|grid|random");
  run->add_option("--loss-prob", loss_prob, "Packet loss probability")
      ->check(CLI::Range(0.0, 1.0));
  run->add_option("--broadcast-prob", broadcast_prob, "Broadcast probability")
      ->check(CLI::Range(0.0, 1.0));
  run->add_option("--max-rounds", max_rounds, "Round limit");
  run->add_flag("--baseline", baseline, "Run the client-server reference instead");

  CLI::App* suite = app.add_subcommand("suite", "Run an experiment suite");
  add_common(suite);
  suite->add_option("name", suite_name, "topology|loss|broadcast")->required();
  suite->add_option("--seeds", seeds, "Master seeds (default 1 2 3 4 5)");

  CLI::App* gen = app.add_subcommand("gen-data", "Write per-sensor feature CSVs");
  add_common(gen);
  gen->add_option("--topology", topology_name, "line|ring|star|grid|random");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    SimConfig cfg = resolve_config(opts);
    if (!topology_name.empty()) {
      cfg.topology.kind = topology_kind_from_string(topology_name);
    }
    if (loss_prob >= 0.0) cfg.link.packet_loss_prob = loss_prob;
    if (broadcast_prob >= 0.0) cfg.link.broadcast_prob = broadcast_prob;
    if (max_rounds > 0) cfg.max_rounds = max_rounds;

    if (run->parsed()) return cmd_run(cfg, opts.threads, baseline);
    if (suite->parsed()) return cmd_suite(suite_name, cfg, seeds, opts.threads);
    if (gen->parsed()) return cmd_gen_data(cfg, opts.threads);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIoError;
  }
  return kOk;
}
