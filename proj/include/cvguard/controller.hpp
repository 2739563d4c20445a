#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cvguard/microbox.hpp"
#include "cvguard/model.hpp"

namespace cvguard {

/// Facts the controller needs to size a prevention filter.
struct MitigationFacts {
  double d_safe = 1.0;
  std::optional<double> v_avg;  // mean legit speed seen at the RSU, if any
  double capacity_pps = 0.0;
  std::size_t n_vehicles = 0;
};

struct PreventionInstance {
  std::uint32_t rsu = 0;
  AttackReport report;
  MitigationParams params;
  double spawned_at = 0.0;
  double last_confirmed = 0.0;
};

enum class ActionKind : std::uint8_t { Provision, Spawn, Refresh, Destroy, Notify, PreArm };

const char* action_name(ActionKind k);

struct ControllerAction {
  double time = 0.0;
  ActionKind kind = ActionKind::Provision;
  std::uint32_t rsu = 0;
  std::optional<std::uint32_t> peer;  // notification sender/receiver
  std::string attack_class;

  friend bool operator==(const ControllerAction&, const ControllerAction&) = default;
};

/// Attack information sent to a neighboring RSU.
struct Notification {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  std::string attack_class;
  double time = 0.0;
  MitigationParams params;
};

/// In-process CVGuard controller. Owns the per-RSU policies, at most one
/// prevention instance per (RSU, attack class), and the dissemination of
/// attack information over the RSU topology. Callers feed reports of several
/// RSUs in ascending RSU id order.
class Controller {
 public:
  Controller(TopologyConfig topology, CvguardConfig config);

  /// Installs `policy` for `rsu`; the microBox applies it at its next window.
  /// Returns false when the policy is unchanged. Throws std::out_of_range for
  /// an unregistered RSU.
  bool provision_policy(std::uint32_t rsu, PolicySet policy, double now = 0.0);
  const PolicySet& policy(std::uint32_t rsu) const;
  bool registered(std::uint32_t rsu) const { return policies_.contains(rsu); }

  /// Handles a confirmed report. Spawns and returns a new prevention instance
  /// when none exists for (rsu, class), notifying every topology neighbor;
  /// otherwise refreshes the existing one and returns nullopt.
  std::optional<PreventionInstance> on_attack_report(std::uint32_t rsu, const AttackReport& report,
                                                     const MitigationFacts& facts, double now);

  /// Re-confirmation that the attack is still under way.
  void refresh(std::uint32_t rsu, const std::string& attack_class, double now);

  /// Destroys instances whose last confirmation is at least quiet_period old.
  std::vector<PreventionInstance> expire(double now);

  const PreventionInstance* active(std::uint32_t rsu, const std::string& attack_class) const;
  std::size_t active_count() const { return instances_.size(); }

  std::vector<std::uint32_t> neighbors(std::uint32_t rsu) const;
  const std::vector<Notification>& notifications() const { return notifications_; }
  /// Parameters neighbors hold ready after a notification.
  const std::map<std::pair<std::uint32_t, std::string>, MitigationParams>& prearmed() const {
    return prearmed_;
  }
  const std::vector<ControllerAction>& actions() const { return actions_; }

 private:
  TopologyConfig topology_;
  CvguardConfig config_;
  std::map<std::uint32_t, PolicySet> policies_;
  std::map<std::pair<std::uint32_t, std::string>, PreventionInstance> instances_;
  std::map<std::pair<std::uint32_t, std::string>, MitigationParams> prearmed_;
  std::vector<Notification> notifications_;
  std::vector<ControllerAction> actions_;
};

}  // namespace cvguard
