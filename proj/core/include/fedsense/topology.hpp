#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fedsense/rng.hpp"
#include "fedsense/vec2.hpp"

namespace fedsense {

enum class TopologyKind { kLine, kRing, kStar, kGrid, kRandom };

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& name);

struct Rect {
  Vec2 lo{100.0, 100.0};
  Vec2 hi{1000.0, 1000.0};

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline constexpr double kDefaultCommRange = 400.0;

/// Undirected link predicate: within communication range, with a hair of
/// relative slack so links constructed at exactly comm_range (the star's
/// spokes) survive floating-point rounding of the coordinates.
bool in_range(Vec2 a, Vec2 b, double comm_range);

struct Topology {
  TopologyKind kind = TopologyKind::kGrid;
  double comm_range = kDefaultCommRange;
  std::vector<Vec2> positions;
  std::vector<std::vector<int>> adjacency;  // sorted, symmetric, irreflexive

  int size() const { return static_cast<int>(positions.size()); }
  int degree(int sensor) const {
    return static_cast<int>(adjacency[static_cast<std::size_t>(sensor)].size());
  }
};

/// Derive adjacency lists from positions and comm_range.
std::vector<std::vector<int>> adjacency_from_positions(const std::vector<Vec2>& positions,
                                                       double comm_range);

// The four fixed topologies, coordinates and range as documented in README.
Topology build_line();
Topology build_ring();
Topology build_star();
Topology build_grid();

/// n uniform positions in area; whole layouts are resampled until the graph
/// is connected. Throws std::runtime_error when max_attempts layouts all
/// come out disconnected (parameters are infeasible).
Topology build_random(int n, const Rect& area, double comm_range, Rng& rng,
                      int max_attempts = 1000);

/// Breadth-first reachability of every sensor from sensor 0.
bool is_connected(const Topology& t);

nlohmann::json topology_to_json(const Topology& t);
Topology topology_from_json(const nlohmann::json& doc);

}  // namespace fedsense
