#include "fedsense/config.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fedsense {

namespace {

void require_known_keys(const nlohmann::json& obj, std::initializer_list<const char*> known,
                        const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::invalid_argument("unknown config key " + where + "." + key);
  }
}

Vec2 vec2_from_json(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

void validate(const SimConfig& cfg) {
  const auto bad = [](const std::string& what) {
    throw std::invalid_argument("invalid config: " + what);
  };
  if (cfg.topology.kind == TopologyKind::kRandom && cfg.topology.random_sensors < 2) {
    bad("topology.random_sensors must be >= 2");
  }
  if (!(cfg.topology.comm_range > 0.0)) bad("topology.comm_range must be positive");
  if (!(cfg.channel.path_loss_exponent > 0.0)) bad("channel.path_loss_exponent must be positive");
  if (!(cfg.channel.reference_distance > 0.0)) bad("channel.reference_distance must be positive");
  if (!(cfg.channel.phase_offset_range >= 0.0)) bad("channel.phase_offset_range must be >= 0");
  if (!(cfg.channel.phase_drift_range >= 0.0)) bad("channel.phase_drift_range must be >= 0");
  if (cfg.dataset.samples_per_sensor < 2) bad("dataset.samples_per_sensor must be >= 2");
  if (!(cfg.dataset.target_fraction > 0.0 && cfg.dataset.target_fraction < 1.0)) {
    bad("dataset.target_fraction must be in (0, 1)");
  }
  if (!(cfg.dataset.train_fraction > 0.0 && cfg.dataset.train_fraction < 1.0)) {
    bad("dataset.train_fraction must be in (0, 1)");
  }
  // Zero is a valid degenerate rate (an update-free run); negatives are not.
  if (!(cfg.train.learning_rate >= 0.0)) bad("train.learning_rate must not be negative");
  if (!(cfg.train.dropout_rate >= 0.0 && cfg.train.dropout_rate < 1.0)) {
    bad("train.dropout_rate must be in [0, 1)");
  }
  if (cfg.train.batch_size < 1) bad("train.batch_size must be >= 1");
  if (cfg.train.local_epochs < 1) bad("train.local_epochs must be >= 1");
  if (!(cfg.link.packet_loss_prob >= 0.0 && cfg.link.packet_loss_prob <= 1.0)) {
    bad("link.packet_loss_prob must be in [0, 1]");
  }
  if (!(cfg.link.broadcast_prob > 0.0 && cfg.link.broadcast_prob <= 1.0)) {
    bad("link.broadcast_prob must be in (0, 1]");
  }
  if (!(cfg.convergence.epsilon > 0.0)) bad("convergence.epsilon must be positive");
  if (cfg.convergence.window < 1) bad("convergence.window must be >= 1");
  if (cfg.max_rounds < 1) bad("max_rounds must be >= 1");
}

nlohmann::json config_to_json(const SimConfig& cfg) {
  nlohmann::json doc;
  auto& topo = doc["topology"];
  topo["kind"] = to_string(cfg.topology.kind);
  topo["random_sensors"] = cfg.topology.random_sensors;
  topo["area"] = {{cfg.topology.area.lo.x, cfg.topology.area.lo.y},
                  {cfg.topology.area.hi.x, cfg.topology.area.hi.y}};
  topo["comm_range"] = cfg.topology.comm_range;
  if (cfg.topology.import_path) topo["import_path"] = *cfg.topology.import_path;

  auto& ch = doc["channel"];
  ch["transmitter_position"] = {cfg.channel.transmitter_position.x,
                                cfg.channel.transmitter_position.y};
  ch["path_loss_exponent"] = cfg.channel.path_loss_exponent;
  ch["reference_snr_db"] = cfg.channel.reference_snr_db;
  ch["reference_distance"] = cfg.channel.reference_distance;
  ch["phase_offset_range"] = cfg.channel.phase_offset_range;
  ch["phase_drift_range"] = cfg.channel.phase_drift_range;

  auto& ds = doc["dataset"];
  ds["samples_per_sensor"] = cfg.dataset.samples_per_sensor;
  ds["target_fraction"] = cfg.dataset.target_fraction;
  ds["train_fraction"] = cfg.dataset.train_fraction;

  auto& tr = doc["train"];
  tr["learning_rate"] = cfg.train.learning_rate;
  tr["rmsprop_decay"] = cfg.train.rmsprop_decay;
  tr["rmsprop_epsilon"] = cfg.train.rmsprop_epsilon;
  tr["dropout_rate"] = cfg.train.dropout_rate;
  tr["batch_size"] = cfg.train.batch_size;
  tr["local_epochs"] = cfg.train.local_epochs;

  auto& link = doc["link"];
  link["packet_loss_prob"] = cfg.link.packet_loss_prob;
  link["broadcast_prob"] = cfg.link.broadcast_prob;

  auto& conv = doc["convergence"];
  conv["epsilon"] = cfg.convergence.epsilon;
  conv["window"] = cfg.convergence.window;

  doc["max_rounds"] = cfg.max_rounds;
  doc["master_seed"] = cfg.master_seed;
  doc["output_dir"] = cfg.output_dir;
  return doc;
}

SimConfig config_from_json(const nlohmann::json& doc) {
  SimConfig cfg;
  require_known_keys(doc,
                     {"topology", "channel", "dataset", "train", "link", "convergence",
                      "max_rounds", "master_seed", "output_dir"},
                     "");

  if (doc.contains("topology")) {
    const auto& topo = doc.at("topology");
    require_known_keys(topo, {"kind", "random_sensors", "area", "comm_range", "import_path"},
                       "topology");
    if (topo.contains("kind")) {
      cfg.topology.kind = topology_kind_from_string(topo.at("kind").get<std::string>());
    }
    cfg.topology.random_sensors = topo.value("random_sensors", cfg.topology.random_sensors);
    if (topo.contains("area")) {
      cfg.topology.area.lo = vec2_from_json(topo.at("area").at(0));
      cfg.topology.area.hi = vec2_from_json(topo.at("area").at(1));
    }
    cfg.topology.comm_range = topo.value("comm_range", cfg.topology.comm_range);
    if (topo.contains("import_path") && !topo.at("import_path").is_null()) {
      cfg.topology.import_path = topo.at("import_path").get<std::string>();
    }
  }

  if (doc.contains("channel")) {
    const auto& ch = doc.at("channel");
    require_known_keys(ch,
                       {"transmitter_position", "path_loss_exponent", "reference_snr_db",
                        "reference_distance", "phase_offset_range", "phase_drift_range"},
                       "channel");
    if (ch.contains("transmitter_position")) {
      cfg.channel.transmitter_position = vec2_from_json(ch.at("transmitter_position"));
    }
    cfg.channel.path_loss_exponent =
        ch.value("path_loss_exponent", cfg.channel.path_loss_exponent);
    cfg.channel.reference_snr_db = ch.value("reference_snr_db", cfg.channel.reference_snr_db);
    cfg.channel.reference_distance =
        ch.value("reference_distance", cfg.channel.reference_distance);
    cfg.channel.phase_offset_range =
        ch.value("phase_offset_range", cfg.channel.phase_offset_range);
    cfg.channel.phase_drift_range =
        ch.value("phase_drift_range", cfg.channel.phase_drift_range);
  }

  if (doc.contains("dataset")) {
    const auto& ds = doc.at("dataset");
    require_known_keys(ds, {"samples_per_sensor", "target_fraction", "train_fraction"},
                       "dataset");
    cfg.dataset.samples_per_sensor =
        ds.value("samples_per_sensor", cfg.dataset.samples_per_sensor);
    cfg.dataset.target_fraction = ds.value("target_fraction", cfg.dataset.target_fraction);
    cfg.dataset.train_fraction = ds.value("train_fraction", cfg.dataset.train_fraction);
  }

  if (doc.contains("train")) {
    const auto& tr = doc.at("train");
    require_known_keys(tr,
                       {"learning_rate", "rmsprop_decay", "rmsprop_epsilon", "dropout_rate",
                        "batch_size", "local_epochs"},
                       "train");
    cfg.train.learning_rate = tr.value("learning_rate", cfg.train.learning_rate);
    cfg.train.rmsprop_decay = tr.value("rmsprop_decay", cfg.train.rmsprop_decay);
    cfg.train.rmsprop_epsilon = tr.value("rmsprop_epsilon", cfg.train.rmsprop_epsilon);
    cfg.train.dropout_rate = tr.value("dropout_rate", cfg.train.dropout_rate);
    cfg.train.batch_size = tr.value("batch_size", cfg.train.batch_size);
    cfg.train.local_epochs = tr.value("local_epochs", cfg.train.local_epochs);
  }

  if (doc.contains("link")) {
    const auto& link = doc.at("link");
    require_known_keys(link, {"packet_loss_prob", "broadcast_prob"}, "link");
    cfg.link.packet_loss_prob = link.value("packet_loss_prob", cfg.link.packet_loss_prob);
    cfg.link.broadcast_prob = link.value("broadcast_prob", cfg.link.broadcast_prob);
  }

  if (doc.contains("convergence")) {
    const auto& conv = doc.at("convergence");
    require_known_keys(conv, {"epsilon", "window"}, "convergence");
    cfg.convergence.epsilon = conv.value("epsilon", cfg.convergence.epsilon);
    cfg.convergence.window = conv.value("window", cfg.convergence.window);
  }

  cfg.max_rounds = doc.value("max_rounds", cfg.max_rounds);
  cfg.master_seed = doc.value("master_seed", cfg.master_seed);
  cfg.output_dir = doc.value("output_dir", cfg.output_dir);

  validate(cfg);
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const std::filesystem::path& path, const SimConfig& cfg) {
  std::ofstream out(path);
  out << config_to_json(cfg).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write config file " + path.string());
}

}  // namespace fedsense
