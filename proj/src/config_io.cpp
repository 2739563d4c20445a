#include "cvguard/config_io.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

namespace cvguard {

using nlohmann::json;

namespace {

/// Reads keys from one object section and rejects anything left unread.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (doc.contains(name_)) {
      node_ = &doc.at(name_);
      if (!node_->is_object()) throw ConfigError(fmt::format("section '{}' must be an object", name_));
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{}.{}: wrong value type ({})", name_, key, v->dump()));
    }
  }

  void get_vec(const char* key, Vec2& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
      throw ConfigError(fmt::format("{}.{}: expected [x, y]", name_, key));
    out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
  }

  /// Numbers, with null meaning "unset" (or +inf when `null_is_inf`).
  void get_opt(const char* key, std::optional<double>& out) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    if (!v->is_number()) throw ConfigError(fmt::format("{}.{}: expected number or null", name_, key));
    out = v->get<double>();
  }

  const json* raw(const char* key) { return find(key); }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, _] : node_->items()) {
      if (!seen_.contains(k)) throw ConfigError(fmt::format("unknown key '{}.{}'", name_, k));
    }
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

const std::set<std::string> kSections = {"scenario", "rsu",    "road", "vehicles", "channel",
                                         "attack",   "cvguard", "ssga", "topology"};

std::string layout_name(MajorLayout l) { return l == MajorLayout::Loop ? "loop" : "stream"; }
std::string mode_name(StarvationMode m) {
  return m == StarvationMode::FailSafe ? "fail_safe" : "extrapolate_stale";
}

std::set<RuleKind> parse_rule_set(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of rule letters");
  std::set<RuleKind> out;
  for (const auto& e : v) {
    auto k = e.is_string() ? rule_from_letter(e.get<std::string>()) : std::nullopt;
    if (!k) throw ConfigError(fmt::format("{}: bad rule letter {}", where, e.dump()));
    out.insert(*k);
  }
  return out;
}

json rule_set_json(const std::set<RuleKind>& rules) {
  json arr = json::array();
  for (RuleKind k : rules) arr.push_back(std::string(1, rule_letter(k)));
  return arr;
}

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

}  // namespace

ScenarioConfig scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario document must be an object");
  for (const auto& [k, _] : doc.items())
    if (!kSections.contains(k)) throw ConfigError(fmt::format("unknown section '{}'", k));

  ScenarioConfig c;

  Section sc(doc, "scenario");
  sc.get("duration", c.duration);
  sc.get("tick", c.tick);
  sc.get("seed", c.seed);
  sc.finish();

  Section rsu(doc, "rsu");
  rsu.get_vec("position", c.rsu.position);
  rsu.get("comm_range", c.rsu.comm_range);
  rsu.get("receive_line_rate", c.rsu.receive_line_rate);
  rsu.get("sch_fraction", c.rsu.sch_fraction);
  rsu.get("vehicle_capacity", c.rsu.vehicle_capacity);
  rsu.finish();

  Section road(doc, "road");
  road.get_vec("major_start", c.road.major_axis.start);
  road.get_vec("major_end", c.road.major_axis.end);
  road.get_vec("minor_start", c.road.minor_axis.start);
  road.get_vec("minor_end", c.road.minor_axis.end);
  road.get("stop_line_offset", c.road.stop_line_offset);
  road.get("lane_halfwidth", c.road.lane_halfwidth);
  road.get("speed_min", c.road.speed_min);
  road.get("speed_max", c.road.speed_max);
  road.get("d_safe", c.road.d_safe);
  road.finish();

  Section veh(doc, "vehicles");
  auto& v = c.vehicles;
  veh.get("n_major", v.n_major);
  veh.get("n_minor", v.n_minor);
  if (const json* lay = veh.raw("major_layout")) {
    const std::string s = lay->is_string() ? lay->get<std::string>() : "";
    if (s == "stream") v.major_layout = MajorLayout::Stream;
    else if (s == "loop") v.major_layout = MajorLayout::Loop;
    else throw ConfigError("vehicles.major_layout: expected \"stream\" or \"loop\"");
  }
  veh.get("major_speed", v.major_speed);
  veh.get("major_speed_spread", v.major_speed_spread);
  veh.get("major_headway_min", v.major_headway_min);
  veh.get("major_headway_mean", v.major_headway_mean);
  veh.get("min_spacing", v.min_spacing);
  veh.get("minor_approach_speed", v.minor_approach_speed);
  veh.get("minor_braking_distance", v.minor_braking_distance);
  veh.get("minor_queue_spacing", v.minor_queue_spacing);
  veh.get("departure_speed", v.departure_speed);
  veh.get("crossing_length", v.crossing_length);
  veh.get("minor_arrival_start", v.minor_arrival_start);
  veh.get("minor_arrival_end", v.minor_arrival_end);
  veh.get("comm_range", v.comm_range);
  veh.get("bsm_rate", v.bsm_rate);
  veh.finish();

  Section ch(doc, "channel");
  ch.get("packet_bytes", c.channel.packet_bytes);
  ch.get("overhead", c.channel.overhead);
  ch.get("sender_rate", c.channel.sender_rate);
  ch.get("receiver_rate", c.channel.receiver_rate);
  ch.get("sch_fraction", c.channel.sch_fraction);
  ch.get("window", c.channel.window);
  ch.get_opt("capacity_pps", c.channel.capacity_pps);
  ch.get("baseline_loss", c.channel.baseline_loss);
  ch.finish();

  Section at(doc, "attack");
  at.get("n_attackers", c.attack.n_attackers);
  at.get("tx_pps", c.attack.tx_pps);
  at.get("start", c.attack.start);
  std::optional<double> stop;
  at.get_opt("stop", stop);
  c.attack.stop = stop.value_or(std::numeric_limits<double>::infinity());
  at.get_vec("spoof_position", c.attack.spoof_position);
  at.finish();

  Section ss(doc, "ssga");
  ss.get("critical_gap", c.ssga.critical_gap);
  ss.get("staleness_limit", c.ssga.staleness_limit);
  if (const json* m = ss.raw("starvation_mode")) {
    const std::string s = m->is_string() ? m->get<std::string>() : "";
    if (s == "extrapolate_stale") c.ssga.starvation_mode = StarvationMode::ExtrapolateStale;
    else if (s == "fail_safe") c.ssga.starvation_mode = StarvationMode::FailSafe;
    else throw ConfigError("ssga.starvation_mode: expected \"extrapolate_stale\" or \"fail_safe\"");
  }
  ss.get("app_rate", c.ssga.app_rate);
  ss.get("conflict_threshold", c.ssga.conflict_threshold);
  ss.finish();

  // Policy defaults depend on road and tick, so they resolve after those sections.
  Section cg(doc, "cvguard");
  auto& g = c.cvguard;
  g.policy = PolicySet::defaults(default_delta(c.road.speed_max, c.tick), c.road.lane_halfwidth);
  g.policy.rules[RuleKind::G].threshold = c.rsu.vehicle_capacity;
  cg.get("enabled", g.enabled);
  auto rule_param = [&](const char* key, RuleKind k, bool secondary = false) {
    std::optional<double> val;
    cg.get_opt(key, val);
    if (val && g.policy.rules.contains(k)) {
      auto& r = g.policy.rules[k];
      (secondary ? r.secondary : r.threshold) = *val;
    }
  };
  if (const json* en = cg.raw("rules")) {
    const auto kinds = parse_rule_set(*en, "cvguard.rules");
    std::erase_if(g.policy.rules, [&](const auto& kv) { return !kinds.contains(kv.first); });
  }
  rule_param("lane_halfwidth", RuleKind::B);
  rule_param("delta", RuleKind::C);
  rule_param("epsilon", RuleKind::D);
  rule_param("headway", RuleKind::D, true);
  rule_param("c1", RuleKind::E);
  rule_param("c2", RuleKind::F);
  rule_param("neighbor_capacity", RuleKind::H);
  rule_param("mu", RuleKind::I);
  rule_param("tau", RuleKind::K);
  cg.get("aggregate_starvation", g.policy.aggregate_starvation);
  if (const json* sigs = cg.raw("signatures")) {
    if (!sigs->is_array()) throw ConfigError("cvguard.signatures: expected an array");
    g.policy.signatures.clear();
    for (const auto& s : *sigs) {
      if (!s.is_object() || !s.contains("rules") || !s.contains("label") ||
          !s.at("label").is_string() || s.size() != 2)
        throw ConfigError("cvguard.signatures: entries are {\"rules\": [...], \"label\": \"...\"}");
      g.policy.signatures.push_back(
          {parse_rule_set(s.at("rules"), "cvguard.signatures"), s.at("label").get<std::string>()});
    }
  }
  cg.get("confirm_windows", g.confirm_windows);
  cg.get("quiet_period", g.quiet_period);
  cg.get("presence_timeout", g.presence_timeout);
  cg.get("beta", g.beta);
  cg.get("alpha_rate", g.alpha_rate);
  cg.get("t_interval_floor", g.t_interval_floor);
  cg.finish();

  Section topo(doc, "topology");
  topo.get("rsu_id", c.topology.rsu_id);
  topo.get("rsus", c.topology.rsus);
  if (const json* links = topo.raw("links")) {
    c.topology.links.clear();
    if (!links->is_array()) throw ConfigError("topology.links: expected [[a, b], ...]");
    for (const auto& l : *links) {
      if (!l.is_array() || l.size() != 2 || !l[0].is_number_unsigned() || !l[1].is_number_unsigned())
        throw ConfigError("topology.links: expected [[a, b], ...]");
      c.topology.links.emplace_back(l[0].get<std::uint32_t>(), l[1].get<std::uint32_t>());
    }
  }
  topo.finish();

  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json d;
  d["scenario"] = {{"duration", c.duration}, {"tick", c.tick}, {"seed", c.seed}};
  d["rsu"] = {{"position", vec_json(c.rsu.position)},
              {"comm_range", c.rsu.comm_range},
              {"receive_line_rate", c.rsu.receive_line_rate},
              {"sch_fraction", c.rsu.sch_fraction},
              {"vehicle_capacity", c.rsu.vehicle_capacity}};
  d["road"] = {{"major_start", vec_json(c.road.major_axis.start)},
               {"major_end", vec_json(c.road.major_axis.end)},
               {"minor_start", vec_json(c.road.minor_axis.start)},
               {"minor_end", vec_json(c.road.minor_axis.end)},
               {"stop_line_offset", c.road.stop_line_offset},
               {"lane_halfwidth", c.road.lane_halfwidth},
               {"speed_min", c.road.speed_min},
               {"speed_max", c.road.speed_max},
               {"d_safe", c.road.d_safe}};
  const auto& v = c.vehicles;
  d["vehicles"] = {{"n_major", v.n_major},
                   {"n_minor", v.n_minor},
                   {"major_layout", layout_name(v.major_layout)},
                   {"major_speed", v.major_speed},
                   {"major_speed_spread", v.major_speed_spread},
                   {"major_headway_min", v.major_headway_min},
                   {"major_headway_mean", v.major_headway_mean},
                   {"min_spacing", v.min_spacing},
                   {"minor_approach_speed", v.minor_approach_speed},
                   {"minor_braking_distance", v.minor_braking_distance},
                   {"minor_queue_spacing", v.minor_queue_spacing},
                   {"departure_speed", v.departure_speed},
                   {"crossing_length", v.crossing_length},
                   {"minor_arrival_start", v.minor_arrival_start},
                   {"minor_arrival_end", v.minor_arrival_end},
                   {"comm_range", v.comm_range},
                   {"bsm_rate", v.bsm_rate}};
  d["channel"] = {{"packet_bytes", c.channel.packet_bytes},
                  {"overhead", c.channel.overhead},
                  {"sender_rate", c.channel.sender_rate},
                  {"receiver_rate", c.channel.receiver_rate},
                  {"sch_fraction", c.channel.sch_fraction},
                  {"window", c.channel.window},
                  {"capacity_pps", c.channel.capacity_pps ? json(*c.channel.capacity_pps) : json(nullptr)},
                  {"baseline_loss", c.channel.baseline_loss}};
  d["attack"] = {{"n_attackers", c.attack.n_attackers},
                 {"tx_pps", c.attack.tx_pps},
                 {"start", c.attack.start},
                 {"stop", std::isinf(c.attack.stop) ? json(nullptr) : json(c.attack.stop)},
                 {"spoof_position", vec_json(c.attack.spoof_position)}};
  d["ssga"] = {{"critical_gap", c.ssga.critical_gap},
               {"staleness_limit", c.ssga.staleness_limit},
               {"starvation_mode", mode_name(c.ssga.starvation_mode)},
               {"app_rate", c.ssga.app_rate},
               {"conflict_threshold", c.ssga.conflict_threshold}};

  const auto& g = c.cvguard;
  json cg = {{"enabled", g.enabled},
             {"aggregate_starvation", g.policy.aggregate_starvation},
             {"confirm_windows", g.confirm_windows},
             {"quiet_period", g.quiet_period},
             {"presence_timeout", g.presence_timeout},
             {"beta", g.beta},
             {"alpha_rate", g.alpha_rate},
             {"t_interval_floor", g.t_interval_floor}};
  std::set<RuleKind> enabled;
  for (const auto& [k, _] : g.policy.rules) enabled.insert(k);
  cg["rules"] = rule_set_json(enabled);
  auto put = [&](const char* key, RuleKind k, bool secondary = false) {
    auto it = g.policy.rules.find(k);
    if (it != g.policy.rules.end()) cg[key] = secondary ? it->second.secondary : it->second.threshold;
  };
  put("lane_halfwidth", RuleKind::B);
  put("delta", RuleKind::C);
  put("epsilon", RuleKind::D);
  put("headway", RuleKind::D, true);
  put("c1", RuleKind::E);
  put("c2", RuleKind::F);
  put("neighbor_capacity", RuleKind::H);
  put("mu", RuleKind::I);
  put("tau", RuleKind::K);
  json sigs = json::array();
  for (const auto& s : g.policy.signatures)
    sigs.push_back({{"rules", rule_set_json(s.rules)}, {"label", s.label}});
  cg["signatures"] = sigs;
  d["cvguard"] = cg;

  json links = json::array();
  for (const auto& [a, b] : c.topology.links) links.push_back(json::array({a, b}));
  d["topology"] = {{"rsu_id", c.topology.rsu_id}, {"rsus", c.topology.rsus}, {"links", links}};
  return d;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path));
}

void set_dotted(json& doc, std::string_view dotted_key, std::string_view value_text) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == dotted_key.size())
    throw ConfigError(fmt::format("axis key '{}' must look like section.key", dotted_key));
  const std::string section(dotted_key.substr(0, dot));
  const std::string key(dotted_key.substr(dot + 1));
  json value = json::parse(value_text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = std::string(value_text);
  doc[section][key] = std::move(value);
}

std::string config_hash(const ScenarioConfig& config) {
  const std::string text = scenario_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace cvguard
