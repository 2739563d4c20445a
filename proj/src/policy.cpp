#include "cvguard/policy.hpp"

#include <stdexcept>

namespace cvguard {

char rule_letter(RuleKind kind) { return static_cast<char>('A' + static_cast<int>(kind)); }

std::optional<RuleKind> rule_from_letter(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  char c = s[0];
  if (c >= 'a' && c <= 'k') c = static_cast<char>(c - 'a' + 'A');
  if (c < 'A' || c > 'K') return std::nullopt;
  return static_cast<RuleKind>(c - 'A');
}

double PolicySet::threshold(RuleKind k) const {
  auto it = rules.find(k);
  if (it == rules.end())
    throw std::out_of_range(std::string("rule not enabled: ") + rule_letter(k));
  return it->second.threshold;
}

std::vector<Signature> PolicySet::default_signatures() {
  return {
      {{RuleKind::E, RuleKind::F}, std::string(kDdosLabel)},
      {{RuleKind::A, RuleKind::B}, std::string(kXTypeLabel)},
      {{RuleKind::B, RuleKind::C, RuleKind::D}, std::string(kYTypeLabel)},
  };
}

PolicySet PolicySet::defaults(double delta, double lane_halfwidth) {
  PolicySet p;
  auto put = [&](RuleKind k, double t, double s = 0.0) { p.rules[k] = Rule{k, t, s}; };
  put(RuleKind::A, 0.0);
  put(RuleKind::B, lane_halfwidth);
  put(RuleKind::C, delta);
  put(RuleKind::D, 2.0, 2.0);
  put(RuleKind::E, 15.0);
  put(RuleKind::F, 5.0);
  put(RuleKind::G, 200.0);
  put(RuleKind::H, 100.0);
  put(RuleKind::I, 100.0);
  put(RuleKind::J, 0.0);
  put(RuleKind::K, 300.0);
  p.signatures = default_signatures();
  return p;
}

}  // namespace cvguard
