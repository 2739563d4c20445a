#include "cvguard/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cvguard/seeds.hpp"

namespace cvguard {

double derive_capacity(const ChannelConfig& cfg) {
  return cfg.sch_fraction * cfg.receiver_rate / (8.0 * cfg.packet_bytes);
}

double effective_capacity(const ChannelConfig& cfg) {
  return cfg.capacity_pps.value_or(derive_capacity(cfg));
}

double attacker_packet_rate(const ChannelConfig& cfg) {
  if (!(cfg.sender_rate > 0.0)) throw std::invalid_argument("sender_rate must be > 0");
  return 1.0 / (8.0 * cfg.packet_bytes / cfg.sender_rate + cfg.overhead);
}

AttackerBound min_attackers(const ChannelConfig& cfg) {
  AttackerBound b;
  b.attacker_pps = attacker_packet_rate(cfg);
  b.capacity_pps = derive_capacity(cfg);
  b.bound = b.capacity_pps / b.attacker_pps;
  // Guard against 2.0000000000000004 turning into 3.
  const double snapped = std::round(b.bound);
  const double c = std::abs(b.bound - snapped) < 1e-9 ? snapped : std::ceil(b.bound);
  b.ceiling = static_cast<std::uint32_t>(std::max(1.0, c));
  return b;
}

std::uint64_t WindowOutcome::total_sent() const {
  std::uint64_t n = 0;
  for (const auto& [_, c] : sent) n += c;
  return n;
}

std::uint64_t WindowOutcome::total_delivered() const {
  std::uint64_t n = 0;
  for (const auto& [_, c] : delivered) n += c;
  return n;
}

std::uint64_t tie_key(VehicleId id, std::uint64_t salt) {
  return salt == 0 ? id.value : splitmix64(salt ^ id.value);
}

WindowOutcome deliver(const SenderCounts& sent, const ChannelConfig& cfg, Rng& rng,
                      std::uint64_t window_index) {
  WindowOutcome out;
  out.window_index = window_index;
  out.sent = sent;
  out.budget = static_cast<std::uint32_t>(std::floor(effective_capacity(cfg) * cfg.window + 1e-9));

  SenderCounts survivors;
  std::uint64_t total = 0;
  for (const auto& [id, n] : sent) {
    std::uint32_t kept = 0;
    if (cfg.baseline_loss <= 0.0) {
      kept = n;
    } else {
      for (std::uint32_t k = 0; k < n; ++k)
        if (uniform01(rng) >= cfg.baseline_loss) ++kept;
    }
    survivors[id] = kept;
    total += kept;
  }

  const std::uint64_t budget = out.budget;
  if (total <= budget) {
    out.delivered = std::move(survivors);
    return out;
  }

  // Exact arithmetic in units of 1/total: quota_i = s_i * budget / total.
  struct Group {
    std::uint32_t survivors = 0;
    std::uint64_t frac_num = 0;  // (s * budget) mod total, per member
    std::vector<VehicleId> members;
  };
  std::map<std::uint32_t, Group> groups;
  std::uint64_t floors = 0;
  for (const auto& [id, s] : survivors) {
    const std::uint64_t num = static_cast<std::uint64_t>(s) * budget;
    out.delivered[id] = static_cast<std::uint32_t>(num / total);
    floors += num / total;
    auto& g = groups[s];
    g.survivors = s;
    g.frac_num = num % total;
    g.members.push_back(id);
  }
  const std::uint64_t leftover = budget - floors;
  if (leftover == 0) return out;

  // Systematic sampling: points offset + k*total, k = 0..leftover-1, over the
  // cumulative fractional mass (which sums to leftover * total exactly).
  const std::uint64_t offset = rng() % total;
  auto points_below = [&](std::uint64_t mass) -> std::uint64_t {
    // number of k >= 0 with offset + k*total < mass
    if (mass <= offset) return 0;
    return (mass - offset + total - 1) / total;
  };
  std::uint64_t cumulative = 0;
  for (auto& [_, g] : groups) {
    const std::uint64_t before = points_below(cumulative);
    cumulative += g.frac_num * g.members.size();
    const std::uint64_t extras = points_below(cumulative) - before;
    if (extras == 0) continue;
    std::sort(g.members.begin(), g.members.end(), [&](VehicleId a, VehicleId b) {
      const auto ka = tie_key(a, cfg.tie_salt), kb = tie_key(b, cfg.tie_salt);
      return ka != kb ? ka < kb : a < b;
    });
    for (std::uint64_t k = 0; k < extras && k < g.members.size(); ++k) ++out.delivered[g.members[k]];
  }
  return out;
}

}  // namespace cvguard
