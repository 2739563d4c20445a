#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cvguard/geometry.hpp"
#include "cvguard/policy.hpp"

namespace cvguard {

struct VehicleId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(VehicleId, VehicleId) = default;
};

enum class Role : std::uint8_t { MajorLegit, MinorLegit, Attacker };

inline bool is_legit(Role r) { return r != Role::Attacker; }
const char* role_name(Role r);

struct VehicleState {
  VehicleId id;
  Vec2 position;
  Vec2 speed_vec;
  double speed = 0.0;  // |speed_vec|
  double comm_range = 300.0;
  Role role = Role::MajorLegit;
  double bsm_rate = 10.0;

  /// Builds a state with `speed` derived from `speed_vec`.
  static VehicleState make(VehicleId id, Role role, Vec2 position, Vec2 speed_vec,
                           double comm_range = 300.0, double bsm_rate = 10.0);
};

struct RsuConfig {
  Vec2 position{0.0, 0.0};
  double comm_range = 300.0;
  double receive_line_rate = 12e6;  // bits/s
  double sch_fraction = 0.46;
  std::uint32_t vehicle_capacity = 200;
};

struct RoadGeometry {
  Axis major_axis{{-280.0, 0.0}, {280.0, 0.0}};
  Axis minor_axis{{0.0, -120.0}, {0.0, 60.0}};
  double stop_line_offset = 5.0;  // meters before the conflict point, minor axis
  double lane_halfwidth = 4.0;
  double speed_min = 0.0;
  double speed_max = 30.0;
  double d_safe = 1.0;

  /// Conflict point and its longitudinal coordinate on each axis.
  Crossing conflict() const { return intersect(major_axis, minor_axis); }
};

struct Bsm {
  VehicleId sender;
  double timestamp = 0.0;
  Vec2 position;
  Vec2 speed_vec;
  std::uint32_t payload_bytes = 220;

  friend bool operator==(const Bsm&, const Bsm&) = default;
};

struct ChannelConfig {
  double packet_bytes = 220.0;    // y
  double overhead = 0.003456;     // IPG + transmission overhead, s/packet
  double sender_rate = 3e6;       // bits/s, attacker radio
  double receiver_rate = 12e6;    // bits/s, RSU radio
  double sch_fraction = 0.46;     // rho
  double window = 0.1;            // s
  std::optional<double> capacity_pps;  // overrides the derived receive capacity
  double baseline_loss = 0.07;
  /// Salt for the tie order among equal-share senders; 0 means raw id order.
  std::uint64_t tie_salt = 0;
};

struct AttackConfig {
  std::uint32_t n_attackers = 0;
  double tx_pps = 500.0;
  double start = 0.0;
  double stop = std::numeric_limits<double>::infinity();
  Vec2 spoof_position{-50.0, 3.5};
};

enum class StarvationMode : std::uint8_t { ExtrapolateStale, FailSafe };

struct SsgaConfig {
  double critical_gap = 6.5;
  double staleness_limit = 0.5;
  StarvationMode starvation_mode = StarvationMode::ExtrapolateStale;
  double app_rate = 10.0;
  double conflict_threshold = 1.5;
};

enum class MajorLayout : std::uint8_t { Stream, Loop };

struct VehiclesConfig {
  std::uint32_t n_major = 50;
  std::uint32_t n_minor = 0;
  MajorLayout major_layout = MajorLayout::Stream;
  double major_speed = 20.0;
  double major_speed_spread = 2.0;  // desired speed ~ U[speed - spread, speed + spread]
  double major_headway_min = 1.5;
  double major_headway_mean = 4.0;
  double min_spacing = 5.0;  // epsilon for car following
  double minor_approach_speed = 10.0;
  double minor_braking_distance = 25.0;
  double minor_queue_spacing = 7.0;
  double departure_speed = 5.0;
  double crossing_length = 10.0;
  double minor_arrival_start = 0.0;
  double minor_arrival_end = 150.0;
  double comm_range = 300.0;
  double bsm_rate = 10.0;
};

struct TopologyConfig {
  std::uint32_t rsu_id = 0;
  std::vector<std::uint32_t> rsus{0};
  std::vector<std::pair<std::uint32_t, std::uint32_t>> links;
};

struct CvguardConfig {
  bool enabled = false;
  PolicySet policy;
  std::uint32_t confirm_windows = 3;
  double quiet_period = 2.0;
  double presence_timeout = 1.0;
  double beta = 1.0;
  double alpha_rate = 10.0;
  double t_interval_floor = 0.1;
};

struct ScenarioConfig {
  double duration = 60.0;
  double tick = 0.1;
  std::uint64_t seed = 1;
  RsuConfig rsu;
  RoadGeometry road;
  VehiclesConfig vehicles;
  ChannelConfig channel;
  AttackConfig attack;
  CvguardConfig cvguard;
  SsgaConfig ssga;
  TopologyConfig topology;

  /// Defaults with the policy thresholds resolved against road and tick.
  static ScenarioConfig defaults();
};

/// Default rule-C delta: S_max * tick * 1.2 (meters per tick).
double default_delta(double speed_max, double tick);

struct ConfigIssue {
  std::string field;
  std::string constraint;
  std::string value;

  friend bool operator==(const ConfigIssue&, const ConfigIssue&) = default;
};

struct ValidationResult {
  std::optional<ScenarioConfig> config;
  std::vector<ConfigIssue> issues;

  bool ok() const { return config.has_value(); }
};

ValidationResult validate_scenario(const ScenarioConfig& config);

/// Projects a vehicle into a BSM; payload size comes from the channel config.
Bsm bsm_from_vehicle(const VehicleState& v, double t, const ChannelConfig& channel = {});

}  // namespace cvguard

template <>
struct std::hash<cvguard::VehicleId> {
  std::size_t operator()(cvguard::VehicleId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
