#pragma once

#include <cstdint>
#include <map>
#include <random>

#include "cvguard/model.hpp"

namespace cvguard {

/// Seeded random source used throughout the simulator. mt19937_64's output
/// sequence is fixed by the standard, so runs reproduce across toolchains.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Receive capacity in packets/s: the RSU decodes at line rate during the
/// SCH fraction of each cycle, rho * x / (8 y).
double derive_capacity(const ChannelConfig& cfg);

/// capacity_pps when set, derived capacity otherwise.
double effective_capacity(const ChannelConfig& cfg);

/// Packets/s one flooding radio can put on air: 1 / (8y / x~ + overhead).
double attacker_packet_rate(const ChannelConfig& cfg);

struct AttackerBound {
  double bound = 0.0;        // real-valued minimum attacker count
  std::uint32_t ceiling = 0; // smallest integer count that exhausts capacity
  double capacity_pps = 0.0;
  double attacker_pps = 0.0;
};

/// Minimum number of flooding radios that exhausts the derived receive
/// capacity: derive_capacity / attacker_packet_rate, which equals
/// rho * (x / x~ + x * overhead / (8 y)). Throws std::invalid_argument for a
/// non-positive sender rate.
AttackerBound min_attackers(const ChannelConfig& cfg);

using SenderCounts = std::map<VehicleId, std::uint32_t>;

struct WindowOutcome {
  std::uint64_t window_index = 0;
  SenderCounts sent;
  SenderCounts delivered;
  std::uint32_t budget = 0;

  std::uint64_t total_sent() const;
  std::uint64_t total_delivered() const;
};

/// One contention window at the RSU receiver.
///
/// Each packet first survives independently with probability
/// 1 - baseline_loss. If the survivors fit in the budget
/// floor(capacity * window) they are all delivered. Otherwise each sender's
/// quota survivors_i * budget / total is split into a floor and a fractional
/// part; the leftover slots are spread over groups of senders with equal
/// survivor counts by systematic sampling (one seeded offset per window), so
/// every group's expected delivery equals its proportional share exactly.
/// Within a group, slots go to the lowest tie keys (sender id, optionally
/// permuted by tie_salt); for a fixed salt the same senders lose out every
/// window, and averaged over salts each sender gets its share.
WindowOutcome deliver(const SenderCounts& sent, const ChannelConfig& cfg, Rng& rng,
                      std::uint64_t window_index = 0);

/// Tie key for a sender under the given salt; identity when salt == 0.
std::uint64_t tie_key(VehicleId id, std::uint64_t salt);

}  // namespace cvguard
