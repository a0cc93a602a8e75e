#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fedsense/config.hpp"

using namespace fedsense;

TEST_CASE("config round trips through JSON") {
  SimConfig cfg;
  cfg.topology.kind = TopologyKind::kRandom;
  cfg.topology.random_sensors = 12;
  cfg.topology.comm_range = 350.0;
  cfg.channel.reference_snr_db = 18.5;
  cfg.channel.phase_drift_range = 0.75;
  cfg.dataset.samples_per_sensor = 321;
  cfg.train.learning_rate = 0.004;
  cfg.train.local_epochs = 3;
  cfg.link.packet_loss_prob = 0.2;
  cfg.link.broadcast_prob = 0.25;
  cfg.convergence.epsilon = 0.02;
  cfg.convergence.window = 37;
  cfg.max_rounds = 999;
  cfg.master_seed = 0xdeadbeefULL;
  cfg.output_dir = "results/run1";

  SimConfig back = config_from_json(config_to_json(cfg));
  CHECK(back == cfg);
}

TEST_CASE("defaults fill in for a minimal config") {
  SimConfig cfg = config_from_json(nlohmann::json::object());
  CHECK(cfg == SimConfig{});
  CHECK(cfg.topology.kind == TopologyKind::kGrid);
  CHECK(cfg.dataset.samples_per_sensor > 0);
}

TEST_CASE("unknown keys are rejected") {
  nlohmann::json doc;
  doc["max_rounds"] = 10;
  doc["max_round"] = 10;  // typo
  CHECK_THROWS_AS(config_from_json(doc), std::invalid_argument);

  nlohmann::json nested;
  nested["train"]["learning_rte"] = 0.1;
  CHECK_THROWS_AS(config_from_json(nested), std::invalid_argument);
}

TEST_CASE("invalid field values are rejected") {
  auto with = [](const char* section, const char* key, double value) {
    nlohmann::json doc;
    doc[section][key] = value;
    return doc;
  };
  CHECK_THROWS_AS(config_from_json(with("link", "packet_loss_prob", 1.5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(with("link", "broadcast_prob", 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(with("train", "dropout_rate", 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(with("train", "learning_rate", -0.1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(with("dataset", "target_fraction", 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(with("convergence", "epsilon", -0.1)),
                  std::invalid_argument);

  nlohmann::json doc;
  doc["max_rounds"] = 0;
  CHECK_THROWS_AS(config_from_json(doc), std::invalid_argument);
}

TEST_CASE("file save and load round trips") {
  SimConfig cfg;
  cfg.master_seed = 321;
  cfg.link.packet_loss_prob = 0.05;
  auto path = std::filesystem::temp_directory_path() / "fedsense_test_config.json";
  save_config(path, cfg);
  SimConfig back = load_config(path);
  CHECK(back == cfg);
  std::filesystem::remove(path);
}

TEST_CASE("missing or malformed config files raise config errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/fedsense.json"), std::invalid_argument);

  auto path = std::filesystem::temp_directory_path() / "fedsense_bad_config.json";
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
  std::filesystem::remove(path);
}
