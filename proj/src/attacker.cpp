#include "cvguard/attacker.hpp"

#include <algorithm>
#include <cmath>

namespace cvguard {

VehicleId attacker_id(std::uint32_t index) { return VehicleId{kAttackerIdBase + index}; }

double active_overlap(const AttackConfig& cfg, double window_start, double window) {
  const double lo = std::max(window_start, cfg.start);
  const double hi = std::min(window_start + window, cfg.stop);
  return std::max(0.0, hi - lo);
}

std::vector<std::uint32_t> flood_packets(const AttackConfig& cfg, double window_start,
                                         double window, std::vector<double>& carry) {
  carry.resize(cfg.n_attackers, 0.0);
  std::vector<std::uint32_t> counts(cfg.n_attackers, 0);
  const double overlap = active_overlap(cfg, window_start, window);
  if (overlap <= 0.0) return counts;
  for (std::uint32_t i = 0; i < cfg.n_attackers; ++i) {
    carry[i] += cfg.tx_pps * overlap;
    // The epsilon absorbs 500 * 0.1 == 49.999999... style representation error.
    const double whole = std::floor(carry[i] + 1e-9);
    counts[i] = static_cast<std::uint32_t>(whole);
    carry[i] -= whole;
  }
  return counts;
}

FloodGenerator::FloodGenerator(AttackConfig cfg, ChannelConfig channel)
    : cfg_(cfg), channel_(channel) {}

std::vector<VehicleState> FloodGenerator::attackers() const {
  std::vector<VehicleState> out;
  out.reserve(cfg_.n_attackers);
  for (std::uint32_t i = 0; i < cfg_.n_attackers; ++i)
    out.push_back(VehicleState::make(attacker_id(i), Role::Attacker, cfg_.spoof_position, {}));
  return out;
}

std::vector<Bsm> FloodGenerator::emit(double window_start, double window) {
  const auto counts = flood_packets(cfg_, window_start, window, carry_);
  const double lo = std::max(window_start, cfg_.start);
  const double overlap = active_overlap(cfg_, window_start, window);
  std::vector<Bsm> out;
  const auto states = attackers();
  for (std::uint32_t i = 0; i < cfg_.n_attackers; ++i) {
    const std::uint32_t n = counts[i];
    for (std::uint32_t k = 0; k < n; ++k)
      out.push_back(bsm_from_vehicle(states[i], lo + overlap * k / n, channel_));
  }
  std::stable_sort(out.begin(), out.end(), [](const Bsm& a, const Bsm& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.sender < b.sender;
  });
  return out;
}

}  // namespace cvguard
