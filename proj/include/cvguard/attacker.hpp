#pragma once

#include <cstdint>
#include <vector>

#include "cvguard/model.hpp"

namespace cvguard {

/// Attacker ids live above this base so they never collide with vehicles.
inline constexpr std::uint32_t kAttackerIdBase = 1'000'000;

VehicleId attacker_id(std::uint32_t index);

/// Length of [window_start, window_start + window) ∩ [start, stop).
double active_overlap(const AttackConfig& cfg, double window_start, double window);

/// Per-attacker packet counts for one window. `carry` holds each attacker's
/// fractional packet remainder between calls (resized as needed), so the
/// long-run emission rate equals tx_pps exactly.
std::vector<std::uint32_t> flood_packets(const AttackConfig& cfg, double window_start,
                                         double window, std::vector<double>& carry);

/// Stateful wrapper around flood_packets that also materializes the BSMs.
class FloodGenerator {
 public:
  FloodGenerator(AttackConfig cfg, ChannelConfig channel);

  /// Flood BSMs for [window_start, window_start + window), evenly spaced over
  /// the active part of the window, ordered by timestamp then attacker.
  std::vector<Bsm> emit(double window_start, double window);

  std::vector<VehicleState> attackers() const;
  const AttackConfig& config() const { return cfg_; }

 private:
  AttackConfig cfg_;
  ChannelConfig channel_;
  std::vector<double> carry_;
};

}  // namespace cvguard
