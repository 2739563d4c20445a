#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "cvguard/advisory.hpp"
#include "cvguard/channel.hpp"
#include "cvguard/model.hpp"

namespace cvguard {

enum class Phase : std::uint8_t { Pending, Approaching, Queued, Crossing, Departed, Parked };

struct SimVehicle {
  VehicleState state;
  Phase phase = Phase::Pending;
  double s = 0.0;              // meters along the vehicle's own axis
  double desired_speed = 0.0;
  double spawn_time = 0.0;
  bool braking = false;
  double crossing_start = 0.0;
  double crossing_end = 0.0;

  bool on_road() const {
    return phase == Phase::Approaching || phase == Phase::Queued || phase == Phase::Crossing;
  }
  bool present() const { return on_road() || phase == Phase::Parked; }
};

/// e_ij = 1 pairs (a < b) with their distance D_ij.
struct NeighborLink {
  VehicleId a;
  VehicleId b;
  double distance = 0.0;

  friend bool operator==(const NeighborLink&, const NeighborLink&) = default;
};

struct WorldState {
  double time = 0.0;
  std::vector<SimVehicle> vehicles;
  std::deque<VehicleId> minor_queue;
  std::set<VehicleId> crossing;
  std::vector<NeighborLink> neighbor_graph;
  std::map<VehicleId, Advisory> advisories;
  std::uint64_t crossing_attempts = 0;

  const SimVehicle* find(VehicleId id) const;
  SimVehicle* find(VehicleId id);
  std::vector<VehicleId> neighbors_of(VehicleId id) const;
};

/// Road constants derived once per scenario.
struct KinematicsParams {
  RoadGeometry road;
  VehiclesConfig vehicles;
  double neighbor_range = 100.0;  // mu
  double major_conflict_s = 0.0;
  double minor_conflict_s = 0.0;
  double minor_stop_s = 0.0;

  static KinematicsParams from(const ScenarioConfig& config);
};

/// Initial world: spawn schedule for major (seeded shifted-exponential
/// headways, or an evenly spaced loop) and minor vehicles (uniform arrival
/// times), plus parked attackers. Ids: majors 1.., minors after the majors.
WorldState make_world(const ScenarioConfig& config, Rng& rng);

/// Advances the world by dt. Majors follow at their desired speed, never
/// closer than min_spacing to the leader. Minors brake uniformly to the stop
/// line (or the queue tail), queue FIFO, and cross at departure speed once
/// their latest advisory is GO. dt == 0 only records the advisories.
WorldState step(WorldState world, const std::map<VehicleId, Advisory>& advisories, double dt,
                const KinematicsParams& params);

/// Recomputes neighbor_graph from current positions (D_ij < mu).
void rebuild_neighbor_graph(WorldState& world, double mu);

struct ConflictEvent {
  VehicleId minor_id;
  VehicleId major_id;
  double time = 0.0;
  double headway = 0.0;

  friend bool operator==(const ConflictEvent&, const ConflictEvent&) = default;
};

/// Conflict candidates at the current instant: for each crossing minor and
/// each approaching major, |arrival - clearance| < threshold, with arrival
/// time = distance / current speed.
std::vector<ConflictEvent> detect_conflicts(const WorldState& world, const KinematicsParams& params,
                                            double threshold);

/// Keeps one event per (minor, major) pair per crossing attempt.
class ConflictTracker {
 public:
  /// Returns the events not seen before for their crossing.
  std::vector<ConflictEvent> admit(const WorldState& world, std::vector<ConflictEvent> candidates);

 private:
  std::set<std::tuple<VehicleId, VehicleId, double>> seen_;
};

}  // namespace cvguard
