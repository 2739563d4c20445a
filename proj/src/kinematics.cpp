#include "cvguard/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "cvguard/attacker.hpp"

namespace cvguard {

namespace {

constexpr double kTiny = 1e-9;

bool is_major(const SimVehicle& v) { return v.state.role == Role::MajorLegit; }
bool is_minor(const SimVehicle& v) { return v.state.role == Role::MinorLegit; }

void place(SimVehicle& v, const Axis& axis, double speed) {
  v.state.position = axis.at(v.s);
  v.state.speed_vec = axis.direction() * speed;
  v.state.speed = std::abs(speed);
}

/// Brings pending vehicles whose spawn time has come onto their axis entry,
/// one per axis per call, provided the entry is clear.
void admit_pending(WorldState& w, const KinematicsParams& p) {
  const double spacing_major = p.vehicles.min_spacing;
  const double spacing_minor = p.vehicles.minor_queue_spacing;
  for (const bool major : {true, false}) {
    double tail = std::numeric_limits<double>::infinity();
    for (const auto& v : w.vehicles)
      if (v.on_road() && is_major(v) == major && is_minor(v) == !major) tail = std::min(tail, v.s);
    const double need = major ? spacing_major : spacing_minor;
    if (tail < need) continue;
    // Earliest due vehicle (vehicles are stored in spawn order per role).
    for (auto& v : w.vehicles) {
      if (v.phase != Phase::Pending || is_major(v) != major || v.state.role == Role::Attacker) continue;
      if (v.spawn_time > w.time + kTiny) break;
      v.phase = Phase::Approaching;
      v.s = 0.0;
      place(v, major ? p.road.major_axis : p.road.minor_axis, v.desired_speed);
      break;
    }
  }
}

void step_majors(WorldState& w, double dt, const KinematicsParams& p) {
  const Axis& axis = p.road.major_axis;
  const double length = axis.length();
  const bool loop = p.vehicles.major_layout == MajorLayout::Loop;
  std::vector<SimVehicle*> order;
  for (auto& v : w.vehicles)
    if (is_major(v) && v.phase == Phase::Approaching) order.push_back(&v);
  std::sort(order.begin(), order.end(), [](const SimVehicle* a, const SimVehicle* b) {
    return a->s != b->s ? a->s > b->s : a->state.id < b->state.id;
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    SimVehicle& v = *order[i];
    double target = v.s + v.desired_speed * dt;
    double leader_s = std::numeric_limits<double>::infinity();
    if (i > 0) leader_s = order[i - 1]->s;
    else if (loop && order.size() > 1) leader_s = order.back()->s + length;
    target = std::min(target, leader_s - p.vehicles.min_spacing);
    target = std::max(target, v.s);
    const double speed = (target - v.s) / dt;
    v.s = target;
    if (loop) {
      if (v.s >= length) v.s -= length;
      place(v, axis, speed);
    } else if (v.s > length) {
      v.phase = Phase::Departed;
      place(v, axis, speed);
    } else {
      place(v, axis, speed);
    }
  }
}

void step_minors(WorldState& w, double dt, const KinematicsParams& p) {
  const Axis& axis = p.road.minor_axis;
  const double spacing = p.vehicles.minor_queue_spacing;
  const double t_now = w.time;

  // Queue head departs on GO (decided with the advisory in force at t_now).
  if (!w.minor_queue.empty()) {
    const VehicleId head = w.minor_queue.front();
    auto it = w.advisories.find(head);
    if (it != w.advisories.end() && it->second.verdict == Verdict::Go) {
      SimVehicle* v = w.find(head);
      v->phase = Phase::Crossing;
      v->crossing_start = t_now;
      v->crossing_end = t_now + p.vehicles.crossing_length / p.vehicles.departure_speed;
      w.minor_queue.pop_front();
      w.crossing.insert(head);
      ++w.crossing_attempts;
    }
  }

  // Crossing vehicles move at departure speed until clearance time.
  for (auto& v : w.vehicles) {
    if (!is_minor(v) || v.phase != Phase::Crossing) continue;
    v.s += p.vehicles.departure_speed * dt;
    place(v, axis, p.vehicles.departure_speed);
    if (t_now + dt >= v.crossing_end - kTiny) {
      v.phase = Phase::Departed;
      w.crossing.erase(v.state.id);
    }
  }

  // Queued vehicles hold their slot behind the stop line.
  for (std::size_t k = 0; k < w.minor_queue.size(); ++k) {
    SimVehicle* v = w.find(w.minor_queue[k]);
    v->s = p.minor_stop_s - static_cast<double>(k) * spacing;
    place(*v, axis, 0.0);
  }

  // Approaching vehicles, nearest to the line first.
  std::vector<SimVehicle*> order;
  for (auto& v : w.vehicles)
    if (is_minor(v) && v.phase == Phase::Approaching) order.push_back(&v);
  std::sort(order.begin(), order.end(), [](const SimVehicle* a, const SimVehicle* b) {
    return a->s != b->s ? a->s > b->s : a->state.id < b->state.id;
  });
  std::vector<SimVehicle*> stopped;
  double queue_tail = p.minor_stop_s - static_cast<double>(w.minor_queue.size()) * spacing;
  double leader_s = std::numeric_limits<double>::infinity();
  // Constant deceleration that brings desired speed to rest over the braking
  // distance: b = v^2 / (2 d). Speed follows min(desired, sqrt(2 b r)).
  const double vd = p.vehicles.minor_approach_speed;
  const double decel = vd * vd / (2.0 * p.vehicles.minor_braking_distance);
  for (SimVehicle* vp : order) {
    SimVehicle& v = *vp;
    const double remaining = queue_tail - v.s;
    double s_new = v.s;
    double v_new = 0.0;
    if (remaining > kTiny) {
      const double profile = std::sqrt(2.0 * decel * remaining);
      const double v0 = std::min(v.desired_speed, profile);
      v.braking = profile <= v.desired_speed + kTiny;
      if (v.braking && v0 <= decel * dt + kTiny) {
        s_new = queue_tail;
      } else if (v.braking) {
        v_new = v0 - decel * dt;
        s_new = v.s + 0.5 * (v0 + v_new) * dt;
      } else {
        // Free flow; start braking mid-step if the profile is reached.
        s_new = v.s + v0 * dt;
        const double r_new = queue_tail - s_new;
        v_new = v0;
        if (r_new < remaining && std::sqrt(2.0 * decel * std::max(r_new, 0.0)) < v0) {
          v_new = std::sqrt(2.0 * decel * std::max(r_new, 0.0));
          v.braking = true;
        }
        s_new = std::min(s_new, queue_tail);
      }
    }
    // Hard gap to the vehicle ahead.
    if (s_new > leader_s - spacing) {
      s_new = std::max(v.s, leader_s - spacing);
      v_new = (s_new - v.s) / dt;
    }
    v.s = s_new;
    place(v, axis, v_new);
    if (v_new <= kTiny && v.s >= queue_tail - kTiny) stopped.push_back(&v);
    leader_s = v.s;
  }
  // Joining the queue: FIFO by arrival (this tick) then id.
  std::sort(stopped.begin(), stopped.end(),
            [](const SimVehicle* a, const SimVehicle* b) { return a->state.id < b->state.id; });
  for (SimVehicle* v : stopped) {
    v->phase = Phase::Queued;
    v->braking = false;
    v->s = p.minor_stop_s - static_cast<double>(w.minor_queue.size()) * spacing;
    place(*v, axis, 0.0);
    w.minor_queue.push_back(v->state.id);
  }
}

}  // namespace

const SimVehicle* WorldState::find(VehicleId id) const {
  for (const auto& v : vehicles)
    if (v.state.id == id) return &v;
  return nullptr;
}

SimVehicle* WorldState::find(VehicleId id) {
  for (auto& v : vehicles)
    if (v.state.id == id) return &v;
  return nullptr;
}

std::vector<VehicleId> WorldState::neighbors_of(VehicleId id) const {
  std::vector<VehicleId> out;
  for (const auto& l : neighbor_graph) {
    if (l.a == id) out.push_back(l.b);
    else if (l.b == id) out.push_back(l.a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

KinematicsParams KinematicsParams::from(const ScenarioConfig& config) {
  KinematicsParams p;
  p.road = config.road;
  p.vehicles = config.vehicles;
  if (config.cvguard.policy.enabled(RuleKind::I))
    p.neighbor_range = config.cvguard.policy.threshold(RuleKind::I);
  const Crossing c = config.road.conflict();
  p.major_conflict_s = c.s_first;
  p.minor_conflict_s = c.s_second;
  p.minor_stop_s = c.s_second - config.road.stop_line_offset;
  return p;
}

WorldState make_world(const ScenarioConfig& config, Rng& rng) {
  const auto params = KinematicsParams::from(config);
  const auto& vc = config.vehicles;
  WorldState w;
  std::uint32_t next_id = 1;

  const double length = config.road.major_axis.length();
  double t = 0.0;
  for (std::uint32_t k = 0; k < vc.n_major; ++k) {
    SimVehicle v;
    v.state = VehicleState::make(VehicleId{next_id++}, Role::MajorLegit, {}, {}, vc.comm_range,
                                 vc.bsm_rate);
    v.desired_speed = vc.major_speed + vc.major_speed_spread * (2.0 * uniform01(rng) - 1.0);
    if (vc.major_layout == MajorLayout::Loop) {
      v.phase = Phase::Approaching;
      v.s = length * static_cast<double>(vc.n_major - 1 - k) / vc.n_major;
      place(v, config.road.major_axis, v.desired_speed);
    } else {
      v.spawn_time = t;
      const double extra = vc.major_headway_mean - vc.major_headway_min;
      t += vc.major_headway_min + (extra > 0 ? -std::log1p(-uniform01(rng)) * extra : 0.0);
    }
    w.vehicles.push_back(v);
  }

  std::vector<double> arrivals(vc.n_minor);
  for (auto& a : arrivals)
    a = vc.minor_arrival_start + (vc.minor_arrival_end - vc.minor_arrival_start) * uniform01(rng);
  std::sort(arrivals.begin(), arrivals.end());
  for (double a : arrivals) {
    SimVehicle v;
    v.state = VehicleState::make(VehicleId{next_id++}, Role::MinorLegit, {}, {}, vc.comm_range,
                                 vc.bsm_rate);
    v.desired_speed = vc.minor_approach_speed;
    v.spawn_time = a;
    w.vehicles.push_back(v);
  }

  for (std::uint32_t i = 0; i < config.attack.n_attackers; ++i) {
    SimVehicle v;
    v.state = VehicleState::make(attacker_id(i), Role::Attacker, config.attack.spoof_position, {},
                                 vc.comm_range, config.attack.tx_pps);
    v.phase = Phase::Parked;
    w.vehicles.push_back(v);
  }

  admit_pending(w, params);
  rebuild_neighbor_graph(w, params.neighbor_range);
  return w;
}

WorldState step(WorldState world, const std::map<VehicleId, Advisory>& advisories, double dt,
                const KinematicsParams& params) {
  for (const auto& [id, adv] : advisories) world.advisories[id] = adv;
  if (dt <= 0.0) return world;
  step_majors(world, dt, params);
  step_minors(world, dt, params);
  world.time += dt;
  admit_pending(world, params);
  rebuild_neighbor_graph(world, params.neighbor_range);
  return world;
}

void rebuild_neighbor_graph(WorldState& world, double mu) {
  world.neighbor_graph.clear();
  std::vector<const SimVehicle*> present;
  for (const auto& v : world.vehicles)
    if (v.present()) present.push_back(&v);
  std::sort(present.begin(), present.end(),
            [](const SimVehicle* a, const SimVehicle* b) { return a->state.id < b->state.id; });
  for (std::size_t i = 0; i < present.size(); ++i) {
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      const double d = distance(present[i]->state.position, present[j]->state.position);
      if (d < mu) world.neighbor_graph.push_back({present[i]->state.id, present[j]->state.id, d});
    }
  }
}

std::vector<ConflictEvent> detect_conflicts(const WorldState& world, const KinematicsParams& params,
                                            double threshold) {
  std::vector<ConflictEvent> out;
  for (const auto& m : world.vehicles) {
    if (!is_minor(m) || m.phase != Phase::Crossing) continue;
    for (const auto& v : world.vehicles) {
      if (!is_major(v) || v.phase != Phase::Approaching) continue;
      const double remaining = params.major_conflict_s - v.s;
      if (remaining <= 0.0 || v.state.speed <= kTiny) continue;
      const double arrival = world.time + remaining / v.state.speed;
      const double headway = std::abs(arrival - m.crossing_end);
      if (headway < threshold) out.push_back({m.state.id, v.state.id, world.time, headway});
    }
  }
  return out;
}

std::vector<ConflictEvent> ConflictTracker::admit(const WorldState& world,
                                                  std::vector<ConflictEvent> candidates) {
  std::vector<ConflictEvent> fresh;
  for (auto& e : candidates) {
    const SimVehicle* m = world.find(e.minor_id);
    const double attempt = m ? m->crossing_start : 0.0;
    if (seen_.insert({e.minor_id, e.major_id, attempt}).second) fresh.push_back(e);
  }
  return fresh;
}

}  // namespace cvguard
