#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cvguard/model.hpp"
#include "cvguard/policy.hpp"

namespace cvguard {

struct Observation {
  double timestamp = 0.0;
  Vec2 position;
  Vec2 speed_vec;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// What the RSU knows about one sender in one detection window.
struct SenderContext {
  VehicleId sender;
  std::vector<Observation> reports;  // this window, timestamp order
  std::uint32_t delivered = 0;
  double first_seen = 0.0;  // T_i,start
  double last_seen = 0.0;   // T_i,end
  std::size_t neighbor_count = 0;
  std::vector<VehicleId> claimed_neighbors;
  std::optional<Observation> previous;  // last report from an earlier window
  bool known = false;                   // heard in an earlier window
};

struct WorldFacts {
  RsuConfig rsu;
  RoadGeometry road;
  double window = 0.1;
  double tick = 0.1;
  std::uint64_t window_index = 0;
};

struct Violation {
  RuleKind rule = RuleKind::A;
  std::optional<VehicleId> sender;  // empty for window-wide rules
  double observed = 0.0;
  double threshold = 0.0;
  std::uint64_t window_index = 0;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct AttackReport {
  std::string attack_class;
  std::vector<VehicleId> implicated;
  std::uint64_t window_index = 0;
  std::vector<Violation> evidence;

  friend bool operator==(const AttackReport&, const AttackReport&) = default;
};

/// Evaluates every enabled rule over one window. Per-sender rules yield at
/// most one violation per sender (the worst observation); G and the
/// aggregate form of F yield one window-wide violation.
std::vector<Violation> evaluate_rules(std::span<const SenderContext> contexts,
                                      const WorldFacts& facts, const PolicySet& policy);

/// True when `v` still violates its rule when re-checked from its recorded
/// observed value and threshold.
bool violation_is_sound(const Violation& v, const WorldFacts& facts);

/// One report per signature whose rules all appear among the window's
/// violations, ordered by label. DDoS implicates the rule-E senders; other
/// classes implicate every sender with a violation of a signature rule.
std::vector<AttackReport> classify_attack(std::span<const Violation> violations,
                                          const PolicySet& policy);

/// max(floor, d_safe / v_avg). Throws std::invalid_argument when v_avg <= 0
/// or floor <= 0.
double compute_t_interval(double d_safe, double v_avg, double floor = 0.1);

struct MitigationParams {
  std::set<VehicleId> implicated;
  double t_interval = 0.1;
  double alpha = 10.0;     // min legit rate the app needs, pkt/s
  double cap_rate = 10.0;  // per non-implicated sender, pkt/s

  friend bool operator==(const MitigationParams&, const MitigationParams&) = default;
};

/// alpha = min(alpha_rate, 1 / t_interval); cap = beta * capacity / n_vehicles,
/// raised to alpha when it would fall below it.
MitigationParams mitigation_params(const AttackReport& report, double t_interval, double alpha_rate,
                                   double beta, double capacity_pps, std::size_t n_vehicles);

struct MitigationResult {
  std::vector<Bsm> passed;
  std::map<VehicleId, std::uint32_t> implicated_offered;
  std::uint32_t dropped = 0;
};

/// DDoS prevention filter. Implicated senders are sampled: the first packet
/// of each t_interval bucket (aligned to t = 0) passes. Every other sender is
/// rate-capped with a per-sender credit; excess is dropped newest first.
class Mitigator {
 public:
  explicit Mitigator(MitigationParams params);

  /// Filters one window of packets (any order; output keeps input order).
  MitigationResult filter(std::span<const Bsm> packets, double window);

  const MitigationParams& params() const { return params_; }

 private:
  MitigationParams params_;
  std::map<VehicleId, double> credit_;
  std::map<VehicleId, std::int64_t> last_bucket_;
};

/// Confirms a report only after it recurs in `windows` consecutive windows.
class Debouncer {
 public:
  explicit Debouncer(std::uint32_t windows) : windows_(windows) {}

  struct Confirmed {
    AttackReport report;
    bool first = false;  // the window in which the streak reached `windows`
  };

  std::vector<Confirmed> update(std::span<const AttackReport> reports);

 private:
  std::uint32_t windows_;
  std::map<std::string, std::uint32_t> streak_;
};

/// Per-RSU security function: sender bookkeeping, rule evaluation,
/// classification with confirmation, and the optional prevention filter.
class MicroBox {
 public:
  using NeighborLookup = std::function<std::vector<VehicleId>(VehicleId)>;

  MicroBox(WorldFacts facts, PolicySet policy, std::uint32_t confirm_windows,
           double presence_timeout);

  /// Takes effect at the next window boundary.
  void provision(PolicySet policy) { pending_policy_ = std::move(policy); }
  const PolicySet& policy() const { return policy_; }

  struct WindowResult {
    std::vector<SenderContext> contexts;
    std::vector<Violation> violations;
    std::vector<AttackReport> reports;
    std::vector<Debouncer::Confirmed> confirmed;
  };

  /// Detection over what the RSU received in one window. `claimed_neighbors`
  /// supplies each sender's announced neighbor list (rule I); when empty the
  /// list is derived from reported positions.
  WindowResult observe_window(std::uint64_t window_index, double window_start,
                              std::span<const Bsm> received,
                              const NeighborLookup& claimed_neighbors = {});

  /// Builds the window's contexts without evaluating rules (exposed for tests).
  std::vector<SenderContext> build_contexts(double window_start, std::span<const Bsm> received,
                                            const NeighborLookup& claimed_neighbors) const;

  void start_mitigation(MitigationParams params);
  void stop_mitigation();
  bool mitigating() const { return mitigator_.has_value(); }
  const Mitigator* mitigator() const { return mitigator_ ? &*mitigator_ : nullptr; }

  /// Packets offered at the RSU, through the prevention filter when active.
  std::vector<Bsm> ingress(std::span<const Bsm> offered);

  /// While mitigating: some implicated sender offered more than C1 at the
  /// filter in the last ingress window.
  bool attack_persists() const { return attack_persists_; }

  /// Senders heard within the presence timeout before `now`.
  std::vector<VehicleId> known_senders(double now) const;
  /// Mean reported speed of non-implicated senders heard within the timeout.
  std::optional<double> mean_speed(double now, const std::set<VehicleId>& exclude) const;

  const WorldFacts& facts() const { return facts_; }

 private:
  struct History {
    double first_seen = 0.0;
    double last_seen = 0.0;
    Observation last;
  };

  WorldFacts facts_;
  PolicySet policy_;
  std::optional<PolicySet> pending_policy_;
  Debouncer debouncer_;
  double presence_timeout_;
  std::map<VehicleId, History> history_;
  std::optional<Mitigator> mitigator_;
  bool attack_persists_ = false;
};

}  // namespace cvguard
