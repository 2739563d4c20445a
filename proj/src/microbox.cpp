#include "cvguard/microbox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cvguard {

namespace {

constexpr double kBucketEps = 1e-9;

double rate_of(const SenderContext& c, double window) {
  return static_cast<double>(c.delivered) / window;
}

double nearest_axis_distance(Vec2 p, const RoadGeometry& road) {
  return std::min(road.major_axis.distance_to(p), road.minor_axis.distance_to(p));
}

// Keeps the largest `observed` per sender, so each sender contributes at
// most one violation per rule.
struct Worst {
  std::optional<double> observed;
  double threshold = 0.0;

  void offer(double obs, double thr, double excess) {
    if (!observed || excess > best_excess) {
      observed = obs;
      threshold = thr;
      best_excess = excess;
    }
  }

 private:
  double best_excess = -std::numeric_limits<double>::infinity();
};

}  // namespace

std::vector<Violation> evaluate_rules(std::span<const SenderContext> contexts,
                                      const WorldFacts& facts, const PolicySet& policy) {
  std::vector<Violation> out;
  const auto emit = [&](RuleKind k, std::optional<VehicleId> s, double obs, double thr) {
    out.push_back(Violation{k, s, obs, thr, facts.window_index});
  };
  const auto on = [&](RuleKind k) { return policy.enabled(k); };

  // Latest reported position per sender, shared by D and I.
  std::vector<std::pair<VehicleId, Vec2>> latest;
  for (const auto& c : contexts)
    if (!c.reports.empty()) latest.emplace_back(c.sender, c.reports.back().position);

  for (const auto& c : contexts) {
    const VehicleId id = c.sender;

    if (on(RuleKind::A)) {
      Worst w;
      for (const auto& r : c.reports) {
        const double d = distance(r.position, facts.rsu.position);
        if (d >= facts.rsu.comm_range) w.offer(d, facts.rsu.comm_range, d - facts.rsu.comm_range);
      }
      if (w.observed) emit(RuleKind::A, id, *w.observed, w.threshold);
    }

    if (on(RuleKind::B)) {
      const double hw = policy.threshold(RuleKind::B);
      Worst w;
      for (const auto& r : c.reports) {
        const double d = nearest_axis_distance(r.position, facts.road);
        if (d > hw) w.offer(d, hw, d - hw);
      }
      if (w.observed) emit(RuleKind::B, id, *w.observed, w.threshold);
    }

    if (on(RuleKind::C)) {
      const double delta = policy.threshold(RuleKind::C);
      Worst w;
      const Observation* prev = c.previous ? &*c.previous : nullptr;
      for (const auto& r : c.reports) {
        if (prev) {
          const double ticks = std::max(1.0, std::round((r.timestamp - prev->timestamp) / facts.tick));
          const double allowed = delta * ticks;
          const double growth = norm(r.position) - norm(prev->position);
          if (growth > allowed) w.offer(growth, allowed, growth - allowed);
        }
        prev = &r;
      }
      if (w.observed) emit(RuleKind::C, id, *w.observed, w.threshold);
    }

    if (on(RuleKind::D) && !c.reports.empty()) {
      const double eps = policy.threshold(RuleKind::D);
      const Vec2 mine = c.reports.back().position;
      double closest = std::numeric_limits<double>::infinity();
      for (const auto& [other, pos] : latest)
        if (other != id) closest = std::min(closest, distance(mine, pos));
      if (closest <= eps) emit(RuleKind::D, id, closest, eps);
    }

    if (on(RuleKind::E)) {
      const double rate = rate_of(c, facts.window);
      if (rate > policy.c1()) emit(RuleKind::E, id, rate, policy.c1());
    }

    if (on(RuleKind::F) && c.known) {
      const double rate = rate_of(c, facts.window);
      if (rate < policy.c2()) emit(RuleKind::F, id, rate, policy.c2());
    }

    if (on(RuleKind::H)) {
      const double cap = policy.threshold(RuleKind::H);
      const auto n = static_cast<double>(c.neighbor_count);
      if (n > cap) emit(RuleKind::H, id, n, cap);
    }

    if (on(RuleKind::I) && !c.reports.empty()) {
      const double mu = policy.threshold(RuleKind::I);
      const Vec2 mine = c.reports.back().position;
      std::size_t mismatches = 0;
      for (const auto& [other, pos] : latest) {
        if (other == id) continue;
        const bool near = distance(mine, pos) < mu;
        const bool listed = std::find(c.claimed_neighbors.begin(), c.claimed_neighbors.end(),
                                      other) != c.claimed_neighbors.end();
        if (near != listed) ++mismatches;
      }
      if (mismatches > 0) emit(RuleKind::I, id, static_cast<double>(mismatches), 0.0);
    }

    if (on(RuleKind::J)) {
      Worst w;
      for (const auto& r : c.reports) {
        const double s = norm(r.speed_vec);
        if (s < facts.road.speed_min) w.offer(s, facts.road.speed_min, facts.road.speed_min - s);
        else if (s > facts.road.speed_max) w.offer(s, facts.road.speed_max, s - facts.road.speed_max);
      }
      if (w.observed) emit(RuleKind::J, id, *w.observed, w.threshold);
    }

    if (on(RuleKind::K)) {
      const double tau = policy.threshold(RuleKind::K);
      const double dwell = c.last_seen - c.first_seen;
      if (dwell > tau) emit(RuleKind::K, id, dwell, tau);
    }
  }

  if (on(RuleKind::F) && policy.aggregate_starvation) {
    std::set<VehicleId> flooding;
    for (const auto& v : out)
      if (v.rule == RuleKind::E && v.sender) flooding.insert(*v.sender);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : contexts) {
      if (!c.known || flooding.contains(c.sender)) continue;
      sum += rate_of(c, facts.window);
      ++n;
    }
    if (n > 0) {
      const double mean = sum / static_cast<double>(n);
      if (mean < policy.c2()) emit(RuleKind::F, std::nullopt, mean, policy.c2());
    }
  }

  if (on(RuleKind::G)) {
    const double cap = policy.threshold(RuleKind::G);
    const auto active = static_cast<double>(std::count_if(
        contexts.begin(), contexts.end(), [](const SenderContext& c) { return c.delivered > 0; }));
    if (active > cap) emit(RuleKind::G, std::nullopt, active, cap);
  }

  return out;
}

bool violation_is_sound(const Violation& v, const WorldFacts& facts) {
  switch (v.rule) {
    case RuleKind::A: return v.observed >= v.threshold;
    case RuleKind::D: return v.observed <= v.threshold;
    case RuleKind::F: return v.observed < v.threshold;
    case RuleKind::J:
      return (v.threshold == facts.road.speed_min && v.observed < v.threshold) ||
             (v.threshold == facts.road.speed_max && v.observed > v.threshold);
    default: return v.observed > v.threshold;
  }
}

std::vector<AttackReport> classify_attack(std::span<const Violation> violations,
                                          const PolicySet& policy) {
  std::set<RuleKind> present;
  for (const auto& v : violations) present.insert(v.rule);

  std::vector<AttackReport> out;
  for (const auto& sig : policy.signatures) {
    if (sig.rules.empty()) continue;
    if (!std::includes(present.begin(), present.end(), sig.rules.begin(), sig.rules.end()))
      continue;
    AttackReport r;
    r.attack_class = sig.label;
    r.window_index = violations.front().window_index;
    std::set<VehicleId> implicated;
    const bool ddos = sig.label == kDdosLabel;
    for (const auto& v : violations) {
      if (!sig.rules.contains(v.rule)) continue;
      r.evidence.push_back(v);
      if (!v.sender) continue;
      if (!ddos || v.rule == RuleKind::E) implicated.insert(*v.sender);
    }
    r.implicated.assign(implicated.begin(), implicated.end());
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const AttackReport& a, const AttackReport& b) {
    return a.attack_class < b.attack_class;
  });
  return out;
}

double compute_t_interval(double d_safe, double v_avg, double floor) {
  if (!(v_avg > 0.0)) throw std::invalid_argument("v_avg must be > 0");
  if (!(floor > 0.0)) throw std::invalid_argument("t_interval floor must be > 0");
  return std::max(floor, d_safe / v_avg);
}

MitigationParams mitigation_params(const AttackReport& report, double t_interval, double alpha_rate,
                                   double beta, double capacity_pps, std::size_t n_vehicles) {
  MitigationParams p;
  p.implicated.insert(report.implicated.begin(), report.implicated.end());
  p.t_interval = t_interval;
  p.alpha = std::min(alpha_rate, 1.0 / t_interval);
  const double share = beta * capacity_pps / static_cast<double>(std::max<std::size_t>(1, n_vehicles));
  p.cap_rate = std::max(p.alpha, share);
  return p;
}

Mitigator::Mitigator(MitigationParams params) : params_(std::move(params)) {}

MitigationResult Mitigator::filter(std::span<const Bsm> packets, double window) {
  std::vector<std::size_t> order(packets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return packets[a].timestamp < packets[b].timestamp;
  });

  const double per_window = params_.cap_rate * window;
  std::map<VehicleId, std::uint32_t> allowance;
  std::vector<bool> keep(packets.size(), false);
  MitigationResult res;

  for (const std::size_t i : order) {
    const Bsm& b = packets[i];
    if (params_.implicated.contains(b.sender)) {
      ++res.implicated_offered[b.sender];
      const auto bucket =
          static_cast<std::int64_t>(std::floor(b.timestamp / params_.t_interval + kBucketEps));
      auto [it, fresh] = last_bucket_.try_emplace(b.sender, bucket);
      if (fresh || it->second != bucket) {
        it->second = bucket;
        keep[i] = true;
      }
      continue;
    }
    auto [it, fresh] = allowance.try_emplace(b.sender, 0);
    if (fresh) {
      double& credit = credit_[b.sender];
      credit = std::min(credit + per_window, per_window + 1.0);
      it->second = static_cast<std::uint32_t>(std::floor(credit + kBucketEps));
    }
    if (it->second > 0) {
      --it->second;
      credit_[b.sender] -= 1.0;
      keep[i] = true;
    }
  }

  for (std::size_t i = 0; i < packets.size(); ++i) {
    if (keep[i]) res.passed.push_back(packets[i]);
    else ++res.dropped;
  }
  return res;
}

std::vector<Debouncer::Confirmed> Debouncer::update(std::span<const AttackReport> reports) {
  std::map<std::string, std::uint32_t> next;
  std::vector<Confirmed> out;
  for (const auto& r : reports) {
    const auto it = streak_.find(r.attack_class);
    const std::uint32_t n = (it == streak_.end() ? 0 : it->second) + 1;
    next[r.attack_class] = n;
    if (n >= windows_) out.push_back({r, n == windows_});
  }
  streak_ = std::move(next);
  return out;
}

MicroBox::MicroBox(WorldFacts facts, PolicySet policy, std::uint32_t confirm_windows,
                   double presence_timeout)
    : facts_(std::move(facts)),
      policy_(std::move(policy)),
      debouncer_(confirm_windows),
      presence_timeout_(presence_timeout) {}

std::vector<SenderContext> MicroBox::build_contexts(double window_start,
                                                    std::span<const Bsm> received,
                                                    const NeighborLookup& claimed_neighbors) const {
  std::map<VehicleId, std::vector<Observation>> by_sender;
  for (const Bsm& b : received)
    by_sender[b.sender].push_back({b.timestamp, b.position, b.speed_vec});

  const double horizon = window_start - presence_timeout_;
  std::vector<SenderContext> out;
  for (auto& [id, obs] : by_sender) {
    std::stable_sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
      return a.timestamp < b.timestamp;
    });
    SenderContext c;
    c.sender = id;
    c.delivered = static_cast<std::uint32_t>(obs.size());
    c.first_seen = obs.front().timestamp;
    c.last_seen = obs.back().timestamp;
    if (auto h = history_.find(id); h != history_.end()) {
      c.first_seen = std::min(c.first_seen, h->second.first_seen);
      c.previous = h->second.last;
      c.known = h->second.last_seen >= horizon;
    }
    c.reports = std::move(obs);
    out.push_back(std::move(c));
  }

  const double mu = policy_.enabled(RuleKind::I) ? policy_.threshold(RuleKind::I) : 0.0;
  for (auto& c : out) {
    if (claimed_neighbors) {
      c.claimed_neighbors = claimed_neighbors(c.sender);
    } else {
      const Vec2 mine = c.reports.back().position;
      for (const auto& o : out)
        if (o.sender != c.sender && distance(mine, o.reports.back().position) < mu)
          c.claimed_neighbors.push_back(o.sender);
    }
    c.neighbor_count = c.claimed_neighbors.size();
  }

  // Known senders that went silent this window still count for rule F.
  for (const auto& [id, h] : history_) {
    if (by_sender.contains(id) || h.last_seen < horizon) continue;
    SenderContext c;
    c.sender = id;
    c.first_seen = h.first_seen;
    c.last_seen = h.last_seen;
    c.previous = h.last;
    c.known = true;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const SenderContext& a, const SenderContext& b) { return a.sender < b.sender; });
  return out;
}

MicroBox::WindowResult MicroBox::observe_window(std::uint64_t window_index, double window_start,
                                                std::span<const Bsm> received,
                                                const NeighborLookup& claimed_neighbors) {
  if (pending_policy_) {
    policy_ = std::move(*pending_policy_);
    pending_policy_.reset();
  }
  facts_.window_index = window_index;

  WindowResult res;
  res.contexts = build_contexts(window_start, received, claimed_neighbors);
  res.violations = evaluate_rules(res.contexts, facts_, policy_);
  if (!res.violations.empty()) res.reports = classify_attack(res.violations, policy_);
  res.confirmed = debouncer_.update(res.reports);

  for (const Bsm& b : received) {
    auto [it, fresh] = history_.try_emplace(b.sender);
    History& h = it->second;
    if (fresh) h.first_seen = b.timestamp;
    if (fresh || b.timestamp >= h.last_seen) {
      h.last_seen = b.timestamp;
      h.last = {b.timestamp, b.position, b.speed_vec};
    }
  }
  return res;
}

void MicroBox::start_mitigation(MitigationParams params) { mitigator_.emplace(std::move(params)); }

void MicroBox::stop_mitigation() {
  mitigator_.reset();
  attack_persists_ = false;
}

std::vector<Bsm> MicroBox::ingress(std::span<const Bsm> offered) {
  if (!mitigator_) {
    attack_persists_ = false;
    return {offered.begin(), offered.end()};
  }
  MitigationResult r = mitigator_->filter(offered, facts_.window);
  attack_persists_ = false;
  if (policy_.enabled(RuleKind::E)) {
    for (const auto& [id, n] : r.implicated_offered)
      if (static_cast<double>(n) / facts_.window > policy_.c1()) attack_persists_ = true;
  }
  return std::move(r.passed);
}

std::vector<VehicleId> MicroBox::known_senders(double now) const {
  std::vector<VehicleId> out;
  for (const auto& [id, h] : history_)
    if (h.last_seen >= now - presence_timeout_) out.push_back(id);
  return out;
}

std::optional<double> MicroBox::mean_speed(double now, const std::set<VehicleId>& exclude) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [id, h] : history_) {
    if (h.last_seen < now - presence_timeout_ || exclude.contains(id)) continue;
    sum += norm(h.last.speed_vec);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace cvguard
