#include "cvguard/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace cvguard {

const char* role_name(Role r) {
  switch (r) {
    case Role::MajorLegit: return "major";
    case Role::MinorLegit: return "minor";
    case Role::Attacker: return "attacker";
  }
  return "?";
}

VehicleState VehicleState::make(VehicleId id, Role role, Vec2 position, Vec2 speed_vec,
                                double comm_range, double bsm_rate) {
  VehicleState v;
  v.id = id;
  v.role = role;
  v.position = position;
  v.speed_vec = speed_vec;
  v.speed = norm(speed_vec);
  v.comm_range = comm_range;
  v.bsm_rate = bsm_rate;
  return v;
}

double default_delta(double speed_max, double tick) { return speed_max * tick * 1.2; }

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig c;
  c.cvguard.policy = PolicySet::defaults(default_delta(c.road.speed_max, c.tick),
                                         c.road.lane_halfwidth);
  c.cvguard.policy.rules[RuleKind::G].threshold = c.rsu.vehicle_capacity;
  return c;
}

namespace {

class Checker {
 public:
  template <typename T>
  void require(bool ok, std::string field, std::string constraint, const T& value) {
    if (!ok) issues_.push_back({std::move(field), std::move(constraint), fmt::format("{}", value)});
  }
  std::vector<ConfigIssue> take() { return std::move(issues_); }

 private:
  std::vector<ConfigIssue> issues_;
};

bool is_multiple(double big, double small) {
  const double k = big / small;
  return k >= 1.0 - 1e-9 && std::abs(k - std::round(k)) < 1e-6;
}

}  // namespace

ValidationResult validate_scenario(const ScenarioConfig& c) {
  Checker ck;
  ck.require(c.duration > 0, "scenario.duration", "duration > 0", c.duration);
  ck.require(c.tick > 0, "scenario.tick", "tick > 0", c.tick);

  ck.require(c.rsu.comm_range > 0, "rsu.comm_range", "comm_range > 0", c.rsu.comm_range);
  ck.require(c.rsu.sch_fraction > 0 && c.rsu.sch_fraction <= 1, "rsu.sch_fraction",
             "0 < sch_fraction <= 1", c.rsu.sch_fraction);
  ck.require(c.rsu.receive_line_rate > 0, "rsu.receive_line_rate", "receive_line_rate > 0",
             c.rsu.receive_line_rate);
  ck.require(c.rsu.vehicle_capacity > 0, "rsu.vehicle_capacity", "vehicle_capacity > 0",
             c.rsu.vehicle_capacity);

  const auto& r = c.road;
  ck.require(r.speed_min >= 0, "road.speed_min", "speed_min >= 0", r.speed_min);
  ck.require(r.speed_min < r.speed_max, "road.speed_max", "speed_min < speed_max", r.speed_max);
  ck.require(r.lane_halfwidth > 0, "road.lane_halfwidth", "lane_halfwidth > 0", r.lane_halfwidth);
  ck.require(r.d_safe >= 0, "road.d_safe", "d_safe >= 0", r.d_safe);
  const Crossing cross = r.conflict();
  ck.require(cross.ok, "road.minor_axis", "axes intersect at exactly one point", "no crossing");
  if (cross.ok) {
    ck.require(r.stop_line_offset >= 0 && r.stop_line_offset < cross.s_second,
               "road.stop_line_offset", "0 <= stop_line_offset < minor approach length",
               r.stop_line_offset);
  }

  const auto& v = c.vehicles;
  ck.require(v.major_speed > 0, "vehicles.major_speed", "major_speed > 0", v.major_speed);
  ck.require(v.major_speed_spread >= 0 && v.major_speed_spread < v.major_speed,
             "vehicles.major_speed_spread", "0 <= spread < major_speed", v.major_speed_spread);
  ck.require(v.major_headway_min > 0, "vehicles.major_headway_min", "major_headway_min > 0",
             v.major_headway_min);
  ck.require(v.major_headway_mean >= v.major_headway_min, "vehicles.major_headway_mean",
             "major_headway_mean >= major_headway_min", v.major_headway_mean);
  ck.require(v.min_spacing > 0, "vehicles.min_spacing", "min_spacing > 0", v.min_spacing);
  ck.require(v.minor_approach_speed > 0, "vehicles.minor_approach_speed",
             "minor_approach_speed > 0", v.minor_approach_speed);
  ck.require(v.minor_braking_distance > 0, "vehicles.minor_braking_distance",
             "minor_braking_distance > 0", v.minor_braking_distance);
  ck.require(v.minor_queue_spacing > 0, "vehicles.minor_queue_spacing",
             "minor_queue_spacing > 0", v.minor_queue_spacing);
  ck.require(v.departure_speed > 0, "vehicles.departure_speed", "departure_speed > 0",
             v.departure_speed);
  ck.require(v.crossing_length > 0, "vehicles.crossing_length", "crossing_length > 0",
             v.crossing_length);
  ck.require(v.minor_arrival_start >= 0 && v.minor_arrival_start <= v.minor_arrival_end,
             "vehicles.minor_arrival_end", "0 <= minor_arrival_start <= minor_arrival_end",
             v.minor_arrival_end);
  ck.require(v.comm_range > 0, "vehicles.comm_range", "comm_range > 0", v.comm_range);
  ck.require(v.bsm_rate == 10.0, "vehicles.bsm_rate", "bsm_rate == 10 for legitimate vehicles",
             v.bsm_rate);
  if (v.major_layout == MajorLayout::Loop && v.n_major > 0) {
    ck.require(r.major_axis.length() / v.n_major >= v.min_spacing, "vehicles.n_major",
               "loop layout needs major length / n_major >= min_spacing", v.n_major);
  }

  const auto& ch = c.channel;
  ck.require(ch.packet_bytes > 0, "channel.packet_bytes", "packet_bytes > 0", ch.packet_bytes);
  ck.require(ch.overhead >= 0, "channel.overhead", "overhead >= 0", ch.overhead);
  ck.require(ch.sender_rate > 0, "channel.sender_rate", "sender_rate > 0", ch.sender_rate);
  ck.require(ch.receiver_rate > 0, "channel.receiver_rate", "receiver_rate > 0",
             ch.receiver_rate);
  ck.require(ch.sch_fraction > 0 && ch.sch_fraction <= 1, "channel.sch_fraction",
             "0 < sch_fraction <= 1", ch.sch_fraction);
  ck.require(ch.window > 0, "channel.window", "window > 0", ch.window);
  ck.require(ch.baseline_loss >= 0 && ch.baseline_loss < 1, "channel.baseline_loss",
             "0 <= baseline_loss < 1", ch.baseline_loss);
  if (ch.capacity_pps)
    ck.require(*ch.capacity_pps > 0, "channel.capacity_pps", "capacity_pps > 0",
               *ch.capacity_pps);
  if (ch.window > 0 && c.tick > 0)
    ck.require(is_multiple(ch.window, c.tick), "channel.window",
               "window is an integer multiple of tick", ch.window);

  const auto& a = c.attack;
  ck.require(a.tx_pps >= 0, "attack.tx_pps", "tx_pps >= 0", a.tx_pps);
  ck.require(a.start >= 0, "attack.start", "start >= 0", a.start);
  ck.require(a.start <= a.stop, "attack.stop", "start <= stop", a.stop);

  const auto& s = c.ssga;
  ck.require(s.critical_gap > 0, "ssga.critical_gap", "critical_gap > 0", s.critical_gap);
  ck.require(s.staleness_limit > 0, "ssga.staleness_limit", "staleness_limit > 0",
             s.staleness_limit);
  ck.require(s.app_rate > 0, "ssga.app_rate", "app_rate > 0", s.app_rate);
  ck.require(s.conflict_threshold > 0, "ssga.conflict_threshold", "conflict_threshold > 0",
             s.conflict_threshold);

  const auto& g = c.cvguard;
  for (const auto& [kind, rule] : g.policy.rules) {
    if (kind == RuleKind::A || kind == RuleKind::J) continue;
    ck.require(rule.threshold > 0, fmt::format("cvguard.rules.{}", rule_letter(kind)),
               "threshold > 0", rule.threshold);
  }
  if (g.policy.enabled(RuleKind::E) && g.policy.enabled(RuleKind::F))
    ck.require(g.policy.c1() > g.policy.c2(), "cvguard.c1", "c1 > c2", g.policy.c1());
  for (std::size_t i = 0; i < g.policy.signatures.size(); ++i) {
    const auto& sig = g.policy.signatures[i];
    const bool subset = std::all_of(sig.rules.begin(), sig.rules.end(),
                                    [&](RuleKind k) { return g.policy.enabled(k); });
    ck.require(!sig.rules.empty() && subset, fmt::format("cvguard.signatures[{}]", i),
               "non-empty subset of enabled rules", sig.label);
  }
  ck.require(g.confirm_windows >= 1, "cvguard.confirm_windows", "confirm_windows >= 1",
             g.confirm_windows);
  ck.require(g.quiet_period > 0, "cvguard.quiet_period", "quiet_period > 0", g.quiet_period);
  ck.require(g.presence_timeout > 0, "cvguard.presence_timeout", "presence_timeout > 0",
             g.presence_timeout);
  ck.require(g.beta > 0, "cvguard.beta", "beta > 0", g.beta);
  ck.require(g.alpha_rate > 0, "cvguard.alpha_rate", "alpha_rate > 0", g.alpha_rate);
  ck.require(g.t_interval_floor > 0, "cvguard.t_interval_floor", "t_interval_floor > 0",
             g.t_interval_floor);

  const auto& t = c.topology;
  const auto known = [&](std::uint32_t id) {
    return std::find(t.rsus.begin(), t.rsus.end(), id) != t.rsus.end();
  };
  ck.require(known(t.rsu_id), "topology.rsu_id", "rsu_id listed in topology.rsus", t.rsu_id);
  for (std::size_t i = 0; i < t.links.size(); ++i) {
    const auto [u, w] = t.links[i];
    ck.require(known(u) && known(w) && u != w, fmt::format("topology.links[{}]", i),
               "links join two distinct listed RSUs", fmt::format("{}-{}", u, w));
  }

  ValidationResult result;
  result.issues = ck.take();
  if (result.issues.empty()) result.config = c;
  return result;
}

Bsm bsm_from_vehicle(const VehicleState& v, double t, const ChannelConfig& channel) {
  Bsm b;
  b.sender = v.id;
  b.timestamp = t;
  b.position = v.position;
  b.speed_vec = v.speed_vec;
  b.payload_bytes = static_cast<std::uint32_t>(std::lround(channel.packet_bytes));
  return b;
}

}  // namespace cvguard
