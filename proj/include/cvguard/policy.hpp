#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cvguard {

/// Behavior rules a..k evaluated by the microBox.
enum class RuleKind : std::uint8_t { A, B, C, D, E, F, G, H, I, J, K };

inline constexpr std::array<RuleKind, 11> kAllRules = {
    RuleKind::A, RuleKind::B, RuleKind::C, RuleKind::D, RuleKind::E, RuleKind::F,
    RuleKind::G, RuleKind::H, RuleKind::I, RuleKind::J, RuleKind::K};

char rule_letter(RuleKind kind);
std::optional<RuleKind> rule_from_letter(std::string_view s);

inline constexpr std::string_view kDdosLabel = "DDoS";
inline constexpr std::string_view kXTypeLabel = "X-type position falsification";
inline constexpr std::string_view kYTypeLabel = "Y-type";

/// One parameterized rule instance.
///
/// `threshold` meaning per kind:
///   A: unused (R_rsu from RsuConfig)      B: lane half-width, m
///   C: delta, m per tick                  D: epsilon, m (`secondary` = headway h, s)
///   E: C1, pkt/s                          F: C2, pkt/s
///   G: vehicle capacity                   H: neighbor capacity
///   I: mu, m                              J: unused (S_min/S_max from road)
///   K: tau, s
struct Rule {
  RuleKind kind = RuleKind::A;
  double threshold = 0.0;
  double secondary = 0.0;

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct Signature {
  std::set<RuleKind> rules;
  std::string label;

  friend bool operator==(const Signature&, const Signature&) = default;
};

struct PolicySet {
  std::map<RuleKind, Rule> rules;
  std::vector<Signature> signatures;
  /// Rule F aggregate variant: mean delivered rate over known senders < C2.
  bool aggregate_starvation = true;

  bool enabled(RuleKind k) const { return rules.contains(k); }
  double threshold(RuleKind k) const;
  double c1() const { return threshold(RuleKind::E); }
  double c2() const { return threshold(RuleKind::F); }

  /// All eleven rules with the documented default thresholds.
  /// `delta` and `lane_halfwidth` depend on road and tick, so they are inputs.
  static PolicySet defaults(double delta, double lane_halfwidth);
  static std::vector<Signature> default_signatures();

  friend bool operator==(const PolicySet&, const PolicySet&) = default;
};

}  // namespace cvguard
