#include "cvguard/ssga.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cvguard {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Go: return "GO";
    case Verdict::Wait: return "WAIT";
    case Verdict::Unknown: return "UNKNOWN";
  }
  return "?";
}

SsgaView update_view(SsgaView view, std::span<const Bsm> delivered, double now) {
  std::map<VehicleId, const Bsm*> latest;
  for (const Bsm& b : delivered) {
    auto [it, inserted] = latest.try_emplace(b.sender, &b);
    if (!inserted && b.timestamp >= it->second->timestamp) it->second = &b;
  }
  for (const auto& [id, b] : latest) view[id] = TrackedVehicle{id, b->position, b->speed_vec, now};
  return view;
}

Advisory compute_advisory(const SsgaView& view, VehicleId minor, const RoadGeometry& geometry,
                          const SsgaConfig& cfg, double now) {
  const Axis& axis = geometry.major_axis;
  const Vec2 dir = axis.direction();
  const double conflict_s = geometry.conflict().s_first;

  double min_gap = std::numeric_limits<double>::infinity();
  bool stale_major = false;
  for (const auto& [id, tv] : view) {
    const double along = std::max(dot(tv.last_speed, dir), 0.0);
    Vec2 pos = tv.last_position;
    const double age = std::max(0.0, now - tv.last_seen);
    if (cfg.starvation_mode == StarvationMode::ExtrapolateStale) pos = pos + dir * (along * age);
    if (axis.distance_to(pos) > geometry.lane_halfwidth) continue;
    const double remaining = conflict_s - axis.project(pos);
    if (remaining <= 0.0) continue;
    if (age > cfg.staleness_limit) stale_major = true;
    min_gap = std::min(min_gap, remaining / std::max(along, kMinSpeed));
  }

  Advisory adv;
  adv.target = minor;
  adv.issued_at = now;
  if (cfg.starvation_mode == StarvationMode::FailSafe && stale_major) {
    adv.verdict = Verdict::Unknown;
    return adv;
  }
  adv.min_gap = min_gap;
  adv.verdict = min_gap >= cfg.critical_gap ? Verdict::Go : Verdict::Wait;
  return adv;
}

double app_drr(const AppIntake& intake, double expected_rate, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("window must be > 0");
  const double expected = static_cast<double>(intake.expected_senders) * expected_rate * window;
  if (expected <= 0.0) return 1.0;
  return std::clamp(static_cast<double>(intake.delivered_messages) / expected, 0.0, 1.0);
}

}  // namespace cvguard
