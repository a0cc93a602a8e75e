#include "fedsense/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fedsense {

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kLine: return "line";
    case TopologyKind::kRing: return "ring";
    case TopologyKind::kStar: return "star";
    case TopologyKind::kGrid: return "grid";
    case TopologyKind::kRandom: return "random";
  }
  throw std::invalid_argument("unknown topology kind");
}

TopologyKind topology_kind_from_string(const std::string& name) {
  if (name == "line") return TopologyKind::kLine;
  if (name == "ring") return TopologyKind::kRing;
  if (name == "star") return TopologyKind::kStar;
  if (name == "grid") return TopologyKind::kGrid;
  if (name == "random") return TopologyKind::kRandom;
  throw std::invalid_argument("unknown topology kind: " + name);
}

bool in_range(Vec2 a, Vec2 b, double comm_range) {
  return squared_distance(a, b) <= comm_range * comm_range * (1.0 + 1e-9);
}

std::vector<std::vector<int>> adjacency_from_positions(const std::vector<Vec2>& positions,
                                                       double comm_range) {
  const int n = static_cast<int>(positions.size());
  std::vector<std::vector<int>> adj(positions.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (in_range(positions[static_cast<std::size_t>(a)],
                   positions[static_cast<std::size_t>(b)], comm_range)) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
      }
    }
  }
  return adj;
}

namespace {

Topology make_topology(TopologyKind kind, std::vector<Vec2> positions,
                       double comm_range = kDefaultCommRange) {
  Topology t;
  t.kind = kind;
  t.comm_range = comm_range;
  t.adjacency = adjacency_from_positions(positions, comm_range);
  t.positions = std::move(positions);
  return t;
}

}  // namespace

Topology build_line() {
  return make_topology(TopologyKind::kLine,
                       {{100, 100}, {300, 300}, {500, 500}, {700, 700}, {900, 900}});
}

Topology build_grid() {
  std::vector<Vec2> positions;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      positions.push_back({100.0 + 300.0 * i, 100.0 + 300.0 * j});
    }
  }
  return make_topology(TopologyKind::kGrid, std::move(positions));
}

Topology build_ring() {
  // The 4x4 grid minus its four center sensors.
  std::vector<Vec2> positions;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if ((i == 1 || i == 2) && (j == 1 || j == 2)) continue;
      positions.push_back({100.0 + 300.0 * i, 100.0 + 300.0 * j});
    }
  }
  return make_topology(TopologyKind::kRing, std::move(positions));
}

Topology build_star() {
  std::vector<Vec2> positions{{500, 500}};
  for (int k = 0; k < 5; ++k) {
    double a = 72.0 * k * std::numbers::pi / 180.0;
    positions.push_back({500.0 + 400.0 * std::cos(a), 500.0 + 400.0 * std::sin(a)});
  }
  return make_topology(TopologyKind::kStar, std::move(positions));
}

Topology build_random(int n, const Rect& area, double comm_range, Rng& rng,
                      int max_attempts) {
  if (n < 2) throw std::invalid_argument("random topology needs at least 2 sensors");
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Vec2> positions;
    positions.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      positions.push_back(
          {rng.uniform(area.lo.x, area.hi.x), rng.uniform(area.lo.y, area.hi.y)});
    }
    Topology t = make_topology(TopologyKind::kRandom, std::move(positions), comm_range);
    if (is_connected(t)) return t;
  }
  throw std::runtime_error(
      "no connected random layout found; area/comm_range are infeasible");
}

bool is_connected(const Topology& t) {
  if (t.positions.empty()) return true;
  std::vector<char> seen(t.positions.size(), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : t.adjacency[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == t.size();
}

nlohmann::json topology_to_json(const Topology& t) {
  nlohmann::json doc;
  doc["kind"] = to_string(t.kind);
  doc["comm_range"] = t.comm_range;
  auto& positions = doc["positions"] = nlohmann::json::array();
  for (const Vec2& p : t.positions) positions.push_back({p.x, p.y});
  auto& edges = doc["edges"] = nlohmann::json::array();
  for (int a = 0; a < t.size(); ++a) {
    for (int b : t.adjacency[static_cast<std::size_t>(a)]) {
      if (a < b) edges.push_back({a, b});
    }
  }
  return doc;
}

Topology topology_from_json(const nlohmann::json& doc) {
  Topology t;
  t.kind = topology_kind_from_string(doc.at("kind").get<std::string>());
  t.comm_range = doc.at("comm_range").get<double>();
  for (const auto& p : doc.at("positions")) {
    t.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  t.adjacency = adjacency_from_positions(t.positions, t.comm_range);

  // The edge list is derived data; reject files that disagree with it.
  std::vector<std::vector<int>> listed(t.positions.size());
  for (const auto& e : doc.at("edges")) {
    int a = e.at(0).get<int>();
    int b = e.at(1).get<int>();
    if (a < 0 || b < 0 || a >= t.size() || b >= t.size() || a == b) {
      throw std::invalid_argument("topology JSON has an out-of-range or self edge");
    }
    listed[static_cast<std::size_t>(a)].push_back(b);
    listed[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : listed) std::sort(nb.begin(), nb.end());
  if (listed != t.adjacency) {
    throw std::invalid_argument(
        "topology JSON edge list does not match the distance rule");
  }
  return t;
}

}  // namespace fedsense
