#include "cvguard/controller.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace cvguard {

const char* action_name(ActionKind k) {
  switch (k) {
    case ActionKind::Provision: return "provision";
    case ActionKind::Spawn: return "spawn";
    case ActionKind::Refresh: return "refresh";
    case ActionKind::Destroy: return "destroy";
    case ActionKind::Notify: return "notify";
    case ActionKind::PreArm: return "prearm";
  }
  return "?";
}

Controller::Controller(TopologyConfig topology, CvguardConfig config)
    : topology_(std::move(topology)), config_(std::move(config)) {
  for (const auto id : topology_.rsus) policies_[id] = config_.policy;
  policies_[topology_.rsu_id] = config_.policy;
}

bool Controller::provision_policy(std::uint32_t rsu, PolicySet policy, double now) {
  auto it = policies_.find(rsu);
  if (it == policies_.end()) throw std::out_of_range("unknown RSU " + std::to_string(rsu));
  if (it->second == policy) return false;
  it->second = std::move(policy);
  actions_.push_back({now, ActionKind::Provision, rsu, std::nullopt, ""});
  return true;
}

const PolicySet& Controller::policy(std::uint32_t rsu) const {
  auto it = policies_.find(rsu);
  if (it == policies_.end()) throw std::out_of_range("unknown RSU " + std::to_string(rsu));
  return it->second;
}

std::vector<std::uint32_t> Controller::neighbors(std::uint32_t rsu) const {
  std::set<std::uint32_t> out;
  for (const auto& [a, b] : topology_.links) {
    if (a == rsu && b != rsu) out.insert(b);
    if (b == rsu && a != rsu) out.insert(a);
  }
  return {out.begin(), out.end()};
}

std::optional<PreventionInstance> Controller::on_attack_report(std::uint32_t rsu,
                                                               const AttackReport& report,
                                                               const MitigationFacts& facts,
                                                               double now) {
  if (!registered(rsu)) throw std::out_of_range("unknown RSU " + std::to_string(rsu));
  const auto key = std::make_pair(rsu, report.attack_class);
  if (auto it = instances_.find(key); it != instances_.end()) {
    it->second.last_confirmed = now;
    actions_.push_back({now, ActionKind::Refresh, rsu, std::nullopt, report.attack_class});
    return std::nullopt;
  }

  // A corridor with no moving legitimate vehicle has no D_safe / V_avg bound;
  // the sampling floor applies alone.
  const double floor = config_.t_interval_floor;
  const double t_interval = facts.v_avg && *facts.v_avg > 0.0
                                ? compute_t_interval(facts.d_safe, *facts.v_avg, floor)
                                : floor;
  PreventionInstance inst;
  inst.rsu = rsu;
  inst.report = report;
  inst.params = mitigation_params(report, t_interval, config_.alpha_rate, config_.beta,
                                  facts.capacity_pps, facts.n_vehicles);
  inst.spawned_at = now;
  inst.last_confirmed = now;
  instances_.emplace(key, inst);
  actions_.push_back({now, ActionKind::Spawn, rsu, std::nullopt, report.attack_class});

  for (const auto peer : neighbors(rsu)) {
    notifications_.push_back({rsu, peer, report.attack_class, now, inst.params});
    actions_.push_back({now, ActionKind::Notify, rsu, peer, report.attack_class});
    prearmed_[{peer, report.attack_class}] = inst.params;
    actions_.push_back({now, ActionKind::PreArm, peer, rsu, report.attack_class});
  }
  return inst;
}

void Controller::refresh(std::uint32_t rsu, const std::string& attack_class, double now) {
  auto it = instances_.find({rsu, attack_class});
  if (it == instances_.end()) return;
  it->second.last_confirmed = now;
}

std::vector<PreventionInstance> Controller::expire(double now) {
  std::vector<PreventionInstance> gone;
  for (auto it = instances_.begin(); it != instances_.end();) {
    if (now - it->second.last_confirmed >= config_.quiet_period - 1e-9) {
      actions_.push_back({now, ActionKind::Destroy, it->first.first, std::nullopt, it->first.second});
      gone.push_back(std::move(it->second));
      it = instances_.erase(it);
    } else {
      ++it;
    }
  }
  return gone;
}

const PreventionInstance* Controller::active(std::uint32_t rsu,
                                             const std::string& attack_class) const {
  auto it = instances_.find({rsu, attack_class});
  return it == instances_.end() ? nullptr : &it->second;
}

}  // namespace cvguard
