#include "cvguard/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "cvguard/attacker.hpp"
#include "cvguard/config_io.hpp"
#include "cvguard/seeds.hpp"
#include "cvguard/ssga.hpp"

namespace cvguard {

namespace {

// Independent random streams of one run.
constexpr std::uint64_t kWorldStream = 1;
constexpr std::uint64_t kChannelStream = 2;
constexpr std::uint64_t kTieStream = 3;

std::string describe(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid scenario:";
  for (const auto& i : issues) out += fmt::format(" {} ({}, got {});", i.field, i.constraint, i.value);
  return out;
}

struct Ratio {
  std::uint64_t delivered = 0;
  std::uint64_t expected = 0;

  void add(std::uint64_t d, std::uint64_t e) {
    delivered += d;
    expected += e;
  }
  double value() const {
    return expected == 0 ? 1.0 : static_cast<double>(delivered) / static_cast<double>(expected);
  }
};

bool ts_order(const Bsm& a, const Bsm& b) {
  return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.sender < b.sender;
}

std::string num(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

}  // namespace

ValidationError::ValidationError(std::vector<ConfigIssue> issues)
    : std::runtime_error(describe(issues)), issues_(std::move(issues)) {}

RunResult run(const ScenarioConfig& input) {
  const ValidationResult checked = validate_scenario(input);
  if (!checked.ok()) throw ValidationError(checked.issues);
  ScenarioConfig cfg = *checked.config;
  if (cfg.channel.tie_salt == 0) cfg.channel.tie_salt = stream_seed(cfg.seed, kTieStream);

  RunResult out;
  out.summary.seed = cfg.seed;
  out.summary.config_hash = config_hash(input);

  Rng world_rng(stream_seed(cfg.seed, kWorldStream));
  Rng channel_rng(stream_seed(cfg.seed, kChannelStream));
  const KinematicsParams params = KinematicsParams::from(cfg);
  WorldState world = make_world(cfg, world_rng);
  FloodGenerator flood(cfg.attack, cfg.channel);

  const double window = cfg.channel.window;
  const auto ticks_per_window = static_cast<std::uint64_t>(std::llround(window / cfg.tick));
  const auto n_ticks = static_cast<std::uint64_t>(std::ceil(cfg.duration / cfg.tick - 1e-9));
  const std::uint32_t rsu_id = cfg.topology.rsu_id;

  std::optional<MicroBox> mbox;
  std::optional<Controller> controller;
  if (cfg.cvguard.enabled) {
    mbox.emplace(WorldFacts{cfg.rsu, cfg.road, window, cfg.tick, 0}, cfg.cvguard.policy,
                 cfg.cvguard.confirm_windows, cfg.cvguard.presence_timeout);
    controller.emplace(cfg.topology, cfg.cvguard);
  }
  const auto is_attacker = [&](VehicleId id) {
    const SimVehicle* v = world.find(id);
    return !v || v->state.role == Role::Attacker;
  };
  const MicroBox::NeighborLookup claimed = [&](VehicleId id) -> std::vector<VehicleId> {
    if (is_attacker(id)) return {};
    return world.neighbors_of(id);
  };

  SsgaView view;
  ConflictTracker tracker;
  std::map<VehicleId, Verdict> last_verdict;
  std::vector<Bsm> pending;
  std::set<VehicleId> legit_in_range;
  Ratio before_attack, during_attack, overall;

  for (std::uint64_t k = 0; k < n_ticks; ++k) {
    const double t = static_cast<double>(k) * cfg.tick;
    for (const auto& v : world.vehicles) {
      if (!is_legit(v.state.role) || !v.on_road()) continue;
      if (distance(v.state.position, cfg.rsu.position) > cfg.rsu.comm_range) continue;
      pending.push_back(bsm_from_vehicle(v.state, t, cfg.channel));
      legit_in_range.insert(v.state.id);
    }

    std::vector<Bsm> received;
    if ((k + 1) % ticks_per_window == 0) {
      const std::uint64_t w = k / ticks_per_window;
      const double window_start = static_cast<double>(w) * window;
      const double window_end = window_start + window;

      std::vector<Bsm> offered = std::move(pending);
      pending.clear();
      const auto attack = flood.emit(window_start, window);
      offered.insert(offered.end(), attack.begin(), attack.end());
      std::stable_sort(offered.begin(), offered.end(), ts_order);

      SenderCounts sent;
      for (const Bsm& b : offered) ++sent[b.sender];
      const std::vector<Bsm> admitted = mbox ? mbox->ingress(offered) : offered;
      SenderCounts admitted_counts;
      for (const Bsm& b : admitted) ++admitted_counts[b.sender];

      const WindowOutcome outcome = deliver(admitted_counts, cfg.channel, channel_rng, w);
      std::map<VehicleId, std::uint32_t> quota = outcome.delivered;
      for (const Bsm& b : admitted) {
        auto it = quota.find(b.sender);
        if (it != quota.end() && it->second > 0) {
          --it->second;
          received.push_back(b);
        }
      }

      for (const auto& [id, n] : sent) {
        const auto d = outcome.delivered.find(id);
        out.drr.push_back({w, id, n, d == outcome.delivered.end() ? 0u : d->second});
      }
      std::size_t legit_received = 0;
      for (const Bsm& b : received)
        if (!is_attacker(b.sender)) ++legit_received;
      AppDrrRow row;
      row.window = w;
      row.time = window_start;
      row.expected_senders = legit_in_range.size();
      row.delivered = legit_received;
      row.drr = app_drr({legit_received, legit_in_range.size()}, cfg.ssga.app_rate, window);
      row.attack_active =
          cfg.attack.n_attackers > 0 && active_overlap(cfg.attack, window_start, window) > 0.0;
      out.app_drr.push_back(row);
      const auto expected = static_cast<std::uint64_t>(
          std::llround(static_cast<double>(legit_in_range.size()) * cfg.ssga.app_rate * window));
      overall.add(legit_received, expected);
      if (row.attack_active) during_attack.add(legit_received, expected);
      else if (cfg.attack.n_attackers == 0 || window_end <= cfg.attack.start + 1e-9)
        before_attack.add(legit_received, expected);
      legit_in_range.clear();

      if (mbox) {
        auto res = mbox->observe_window(w, window_start, received, claimed);
        out.violations.insert(out.violations.end(), res.violations.begin(), res.violations.end());
        for (const auto& c : res.confirmed) {
          out.reports.push_back({window_end, c.report, c.first});
          if (c.first) ++out.summary.confirmed_reports;
          const bool ddos = c.report.attack_class == kDdosLabel;
          if (ddos && !out.summary.first_detection) out.summary.first_detection = window_end;

          const std::set<VehicleId> implicated(c.report.implicated.begin(), c.report.implicated.end());
          MitigationFacts facts;
          facts.d_safe = cfg.road.d_safe;
          facts.v_avg = mbox->mean_speed(window_end, implicated);
          facts.capacity_pps = effective_capacity(cfg.channel);
          for (const auto id : mbox->known_senders(window_end))
            if (!implicated.contains(id)) ++facts.n_vehicles;
          const auto spawned = controller->on_attack_report(rsu_id, c.report, facts, window_end);
          if (spawned && ddos) mbox->start_mitigation(spawned->params);
        }
        if (mbox->attack_persists())
          controller->refresh(rsu_id, std::string(kDdosLabel), window_end);
        for (const auto& gone : controller->expire(window_end))
          if (gone.report.attack_class == kDdosLabel) mbox->stop_mitigation();
      }
    }

    if (!received.empty()) view = update_view(std::move(view), received, t);

    std::map<VehicleId, Advisory> advisories;
    if (!world.minor_queue.empty()) {
      const VehicleId head = world.minor_queue.front();
      const Advisory adv = compute_advisory(view, head, cfg.road, cfg.ssga, t);
      advisories.emplace(head, adv);
      auto [it, fresh] = last_verdict.try_emplace(head, adv.verdict);
      if (fresh || it->second != adv.verdict) {
        it->second = adv.verdict;
        out.advisories.push_back({t, adv});
      }
    }

    world = step(std::move(world), advisories, cfg.tick, params);
    auto fresh = tracker.admit(world, detect_conflicts(world, params, cfg.ssga.conflict_threshold));
    out.conflicts.insert(out.conflicts.end(), fresh.begin(), fresh.end());
  }

  if (controller) out.actions = controller->actions();

  Summary& s = out.summary;
  s.baseline_drr = before_attack.value();
  s.attacked_drr = during_attack.expected > 0 ? during_attack.value() : overall.value();
  s.app_drr = overall.value();
  s.conflicts = out.conflicts.size();
  s.crossing_attempts = world.crossing_attempts;
  s.conflict_pct = 100.0 * static_cast<double>(s.conflicts) /
                   static_cast<double>(std::max<std::uint64_t>(1, s.crossing_attempts));
  return out;
}

std::vector<std::string> summary_columns() {
  return {"baseline_drr", "attacked_drr",      "app_drr",           "conflicts",
          "crossing_attempts", "conflict_pct", "confirmed_reports", "first_detection"};
}

std::vector<double> summary_values(const Summary& s) {
  return {s.baseline_drr,
          s.attacked_drr,
          s.app_drr,
          static_cast<double>(s.conflicts),
          static_cast<double>(s.crossing_attempts),
          s.conflict_pct,
          static_cast<double>(s.confirmed_reports),
          s.first_detection.value_or(std::numeric_limits<double>::quiet_NaN())};
}

void write_outputs(const RunResult& r, const ScenarioConfig& config,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    auto f = open_out(dir / "drr.csv");
    f << "window,sender,sent,delivered\n";
    for (const auto& row : r.drr)
      f << fmt::format("{},{},{},{}\n", row.window, row.sender.value, row.sent, row.delivered);
  }
  {
    auto f = open_out(dir / "app_drr.csv");
    f << "window,time,expected_senders,delivered,drr,attack_active\n";
    for (const auto& row : r.app_drr)
      f << fmt::format("{},{},{},{},{},{}\n", row.window, row.time, row.expected_senders,
                       row.delivered, row.drr, row.attack_active ? 1 : 0);
  }
  {
    auto f = open_out(dir / "conflicts.csv");
    f << "time,minor,major,headway\n";
    for (const auto& e : r.conflicts)
      f << fmt::format("{},{},{},{}\n", e.time, e.minor_id.value, e.major_id.value, e.headway);
  }
  {
    auto f = open_out(dir / "summary.csv");
    f << "seed,config_hash";
    for (const auto& c : summary_columns()) f << ',' << c;
    f << '\n' << r.summary.seed << ',' << r.summary.config_hash;
    for (const double v : summary_values(r.summary)) f << ',' << num(v);
    f << '\n';
  }
  {
    auto f = open_out(dir / "reports.csv");
    f << "time,window,class,first,implicated,evidence\n";
    for (const auto& row : r.reports) {
      std::string ids;
      for (const auto id : row.report.implicated)
        ids += (ids.empty() ? "" : " ") + std::to_string(id.value);
      f << fmt::format("{},{},{},{},{},{}\n", row.time, row.report.window_index,
                       row.report.attack_class, row.first ? 1 : 0, ids, row.report.evidence.size());
    }
  }
  {
    auto f = open_out(dir / "violations.csv");
    f << "window,rule,sender,observed,threshold\n";
    for (const auto& v : r.violations)
      f << fmt::format("{},{},{},{},{}\n", v.window_index, rule_letter(v.rule),
                       v.sender ? std::to_string(v.sender->value) : std::string(), v.observed,
                       v.threshold);
  }
  {
    auto f = open_out(dir / "controller.csv");
    f << "time,action,rsu,peer,class\n";
    for (const auto& a : r.actions)
      f << fmt::format("{},{},{},{},{}\n", a.time, action_name(a.kind), a.rsu,
                       a.peer ? std::to_string(*a.peer) : std::string(), a.attack_class);
  }
  {
    auto f = open_out(dir / "advisories.csv");
    f << "time,target,verdict,min_gap\n";
    for (const auto& row : r.advisories) {
      const auto& a = row.advisory;
      f << fmt::format("{},{},{},{}\n", row.time, a.target.value, verdict_name(a.verdict),
                       a.min_gap ? fmt::format("{}", *a.min_gap) : std::string());
    }
  }
  {
    nlohmann::json m;
    m["seed"] = r.summary.seed;
    m["config_hash"] = r.summary.config_hash;
    m["config"] = scenario_to_json(config);
    m["files"] = {"drr.csv",       "app_drr.csv",    "conflicts.csv",  "summary.csv",
                  "reports.csv",   "violations.csv", "controller.csv", "advisories.csv"};
    auto f = open_out(dir / "manifest.json");
    f << m.dump(2) << '\n';
  }
}

SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    throw std::invalid_argument("axis must look like section.key=v1,v2: " + text);
  SweepAxis axis;
  axis.key = text.substr(0, eq);
  std::string rest = text.substr(eq + 1);
  std::size_t pos = 0;
  while (true) {
    const auto comma = rest.find(',', pos);
    std::string v = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (v.empty()) throw std::invalid_argument("empty value in axis " + axis.key);
    axis.values.push_back(std::move(v));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return axis;
}

std::vector<std::uint64_t> sweep_seeds(std::uint64_t base, std::size_t n) {
  std::vector<std::uint64_t> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = derive_seed(base, k);
  return out;
}

namespace {

std::optional<double> as_number(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

bool value_less(const std::string& a, const std::string& b) {
  const auto x = as_number(a), y = as_number(b);
  if (x && y) return *x < *y;
  if (x != y) return x.has_value();  // numbers before words
  return a < b;
}

}  // namespace

SweepTable sweep(const nlohmann::json& base_doc, const std::vector<SweepAxis>& axes,
                 const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  std::vector<std::vector<std::string>> values;
  SweepTable table;
  for (const auto& a : axes) {
    if (a.values.empty()) throw std::invalid_argument("axis without values: " + a.key);
    auto v = a.values;
    std::sort(v.begin(), v.end(), value_less);
    v.erase(std::unique(v.begin(), v.end(), [](const auto& x, const auto& y) {
              return !value_less(x, y) && !value_less(y, x);
            }),
            v.end());
    values.push_back(std::move(v));
    table.keys.push_back(a.key);
  }

  std::vector<std::size_t> idx(axes.size(), 0);
  const std::size_t n_cols = summary_columns().size();
  while (true) {
    nlohmann::json doc = base_doc;
    std::vector<std::string> point;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      point.push_back(values[i][idx[i]]);
      set_dotted(doc, axes[i].key, values[i][idx[i]]);
    }
    const ScenarioConfig base = scenario_from_json(doc);

    std::vector<std::vector<double>> rows;
    for (const auto seed : seeds) {
      ScenarioConfig cfg = base;
      cfg.seed = seed;
      rows.push_back(summary_values(run(cfg).summary));
      table.rows.push_back({point, std::to_string(seed), rows.back()});
    }
    std::vector<double> mean(n_cols, 0.0), sd(n_cols, 0.0);
    const auto n = static_cast<double>(rows.size());
    for (std::size_t c = 0; c < n_cols; ++c) {
      double sum = 0.0;
      for (const auto& r : rows) sum += r[c];
      mean[c] = sum / n;
      double ss = 0.0;
      for (const auto& r : rows) ss += (r[c] - mean[c]) * (r[c] - mean[c]);
      sd[c] = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    table.rows.push_back({point, "mean", mean});
    table.rows.push_back({point, "stddev", sd});

    // Odometer over the axes, last axis fastest.
    std::size_t i = axes.size();
    while (i > 0) {
      --i;
      if (++idx[i] < values[i].size()) break;
      idx[i] = 0;
      if (i == 0) return table;
    }
    if (axes.empty()) return table;
  }
}

void write_sweep(const SweepTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto f = open_out(path);
  for (const auto& k : table.keys) f << k << ',';
  f << "seed";
  for (const auto& c : summary_columns()) f << ',' << c;
  f << '\n';
  for (const auto& row : table.rows) {
    for (const auto& v : row.point) f << v << ',';
    f << row.label;
    for (const double v : row.values) f << ',' << num(v);
    f << '\n';
  }
}

std::string feasibility_report(const ChannelConfig& channel) {
  const AttackerBound b = min_attackers(channel);
  std::string out;
  out += fmt::format("receive capacity      {:.2f} pkt/s   (sch_fraction * receiver_bps / (8 * packet_bytes))\n",
                     b.capacity_pps);
  out += fmt::format("attacker packet rate  {:.2f} pkt/s   (1 / (8 * packet_bytes / attacker_bps + overhead_s))\n",
                     b.attacker_pps);
  out += fmt::format("attacker bound        {:.2f}\n", b.bound);
  out += fmt::format("minimum attackers     {}\n", b.ceiling);
  out +=
      "note: the bound is receive capacity divided by one attacker's packet rate.\n"
      "      The published analysis reports 2.83, i.e. min(N_attackers) = 3, for\n"
      "      y = 220 B, 3 Mb/s attacker, 12 Mb/s receiver, 3.456 ms overhead and\n"
      "      rho = 0.46; the same inputs give 12.68 here. The published value does\n"
      "      not follow from its printed formula under a dimensionally consistent\n"
      "      reading, so the discrepancy is reported, not reconciled.\n";
  return out;
}

}  // namespace cvguard
