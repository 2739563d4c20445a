#pragma once

#include <cstddef>
#include <map>
#include <span>

#include "cvguard/advisory.hpp"
#include "cvguard/model.hpp"

namespace cvguard {

struct TrackedVehicle {
  VehicleId id;
  Vec2 last_position;
  Vec2 last_speed;
  double last_seen = 0.0;

  friend bool operator==(const TrackedVehicle&, const TrackedVehicle&) = default;
};

/// The RSU application's picture of the intersection, built only from
/// delivered BSMs.
using SsgaView = std::map<VehicleId, TrackedVehicle>;

/// Speed floor for arrival-time division.
inline constexpr double kMinSpeed = 0.1;

/// Overwrites each sender's track with its delivered BSM (latest timestamp
/// wins within a batch); last_seen is set to `now`.
SsgaView update_view(SsgaView view, std::span<const Bsm> delivered, double now);

/// GO/WAIT/UNKNOWN for the minor vehicle at the stop line. A tracked vehicle
/// counts as an approaching major when it lies within lane_halfwidth of the
/// major axis upstream of the conflict point.
Advisory compute_advisory(const SsgaView& view, VehicleId minor, const RoadGeometry& geometry,
                          const SsgaConfig& cfg, double now);

/// Messages the application received over a window versus what the
/// legitimate senders in range should have produced.
struct AppIntake {
  std::size_t delivered_messages = 0;
  std::size_t expected_senders = 0;
};

/// delivered / (expected senders * rate * window), clamped to [0, 1]. With no
/// expected sender the ratio is 1.
double app_drr(const AppIntake& intake, double expected_rate, double window);

}  // namespace cvguard
