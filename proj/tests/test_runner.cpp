#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "cvguard/config_io.hpp"
#include "cvguard/runner.hpp"

using namespace cvguard;
namespace fs = std::filesystem;

namespace {

fs::path source_config(const char* name) {
  return fs::path(CVGUARD_SOURCE_DIR) / "configs" / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cvguard_test_runner_" + name);
  fs::remove_all(dir);
  return dir;
}

// Short intersection scenario with minor traffic, used where a full fig4 run
// would be slow.
ScenarioConfig small_intersection(std::uint32_t attackers, bool guard) {
  auto cfg = load_scenario(source_config("fig4.json"));
  cfg.duration = 40.0;
  cfg.vehicles.n_minor = 8;
  cfg.vehicles.n_major = 15;
  cfg.vehicles.minor_arrival_end = 25.0;
  cfg.attack.n_attackers = attackers;
  cfg.cvguard.enabled = guard;
  return cfg;
}

bool same_values(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] == b[i] || (std::isnan(a[i]) && std::isnan(b[i])))) return false;
  return true;
}

}  // namespace

TEST_CASE("identical config and seed give byte-identical files") {
  const auto cfg = small_intersection(3, true);
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  write_outputs(run(cfg), cfg, d1);
  write_outputs(run(cfg), cfg, d2);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d1)) {
    CAPTURE(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(d2 / e.path().filename()));
    ++files;
  }
  CHECK(files == 9);
  const auto manifest = nlohmann::json::parse(slurp(d1 / "manifest.json"));
  CHECK(manifest.at("seed") == cfg.seed);
  CHECK(manifest.at("config_hash") == config_hash(cfg));
}

TEST_CASE("drr.csv and conflicts.csv carry the documented columns") {
  const auto cfg = small_intersection(3, false);
  const auto dir = scratch("cols");
  write_outputs(run(cfg), cfg, dir);
  auto header = [&](const char* f) {
    std::istringstream in(slurp(dir / f));
    std::string line;
    std::getline(in, line);
    return line;
  };
  CHECK(header("drr.csv") == "window,sender,sent,delivered");
  CHECK(header("conflicts.csv") == "time,minor,major,headway");
}

TEST_CASE("baseline application DRR is about 0.93") {
  const auto cfg = load_scenario(source_config("baseline.json"));
  const auto r = run(cfg);
  CHECK(std::abs(r.summary.app_drr - 0.93) <= 0.02);
  CHECK(r.summary.confirmed_reports == 0);
  CHECK(r.summary.conflicts == 0);
}

TEST_CASE("invalid config is rejected with its issues") {
  auto cfg = ScenarioConfig::defaults();
  cfg.tick = 0.0;
  try {
    run(cfg);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK_FALSE(e.issues().empty());
  }
}

TEST_CASE("security layer is a no-op on clean traffic") {
  const auto off = run(small_intersection(0, false));
  const auto on = run(small_intersection(0, true));
  CHECK(on.drr == off.drr);
  CHECK(on.app_drr == off.app_drr);
  CHECK(on.conflicts == off.conflicts);
  CHECK(on.advisories == off.advisories);
  CHECK(on.reports.empty());
  CHECK(on.actions.empty());
  auto a = on.summary, b = off.summary;
  a.config_hash = b.config_hash;
  CHECK(a == b);
}

TEST_CASE("summary invariants and shared window range") {
  for (const bool guard : {false, true}) {
    const auto cfg = small_intersection(3, guard);
    const auto r = run(cfg);
    const auto& s = r.summary;
    CHECK(s.conflicts == r.conflicts.size());
    CHECK(s.conflict_pct ==
          doctest::Approx(100.0 * s.conflicts / std::max<std::uint64_t>(1, s.crossing_attempts)));
    const auto windows = static_cast<std::uint64_t>(std::llround(cfg.duration / cfg.channel.window));
    REQUIRE(r.app_drr.size() == windows);
    for (std::uint64_t w = 0; w < windows; ++w) CHECK(r.app_drr[w].window == w);
    std::set<std::uint64_t> drr_windows;
    for (const auto& row : r.drr) {
      drr_windows.insert(row.window);
      CHECK(row.delivered <= row.sent);
    }
    CHECK(*drr_windows.begin() == 0);
    CHECK(*drr_windows.rbegin() == windows - 1);
    for (const auto& v : r.violations) CHECK(v.window_index < windows);
  }
}

TEST_CASE("attack degrades delivery and detection fires after onset") {
  const auto cfg = load_scenario(source_config("detection.json"));
  const auto r = run(cfg);
  REQUIRE(r.summary.first_detection);
  CHECK(*r.summary.first_detection >= cfg.attack.start);
  CHECK(*r.summary.first_detection - cfg.attack.start <= 0.3 + 1e-9);
  for (const auto& rep : r.reports) CHECK(rep.time > cfg.attack.start);
  const auto& first = r.reports.front().report;
  CHECK(first.attack_class == kDdosLabel);
  CHECK(first.implicated.size() == cfg.attack.n_attackers);
}

TEST_CASE("mitigation is torn down after the attack and delivery recovers") {
  auto cfg = load_scenario(source_config("detection.json"));
  cfg.duration = 20.0;
  cfg.attack.start = 2.0;
  cfg.attack.stop = 6.0;
  const auto r = run(cfg);
  const auto spawn = std::find_if(r.actions.begin(), r.actions.end(),
                                  [](const auto& a) { return a.kind == ActionKind::Spawn; });
  const auto destroy = std::find_if(r.actions.begin(), r.actions.end(),
                                    [](const auto& a) { return a.kind == ActionKind::Destroy; });
  REQUIRE(spawn != r.actions.end());
  REQUIRE(destroy != r.actions.end());
  CHECK(spawn->time < cfg.attack.stop);
  CHECK(destroy->time >= cfg.attack.stop + cfg.cvguard.quiet_period - 0.2);
  CHECK(destroy->time <= cfg.attack.stop + cfg.cvguard.quiet_period + 0.5);

  // After teardown the legit delivery matches an unguarded run of the same
  // tail, which is the clean baseline.
  auto plain = cfg;
  plain.cvguard.enabled = false;
  const auto p = run(plain);
  auto tail_mean = [&](const RunResult& res) {
    double sum = 0;
    int n = 0;
    for (const auto& row : res.app_drr)
      if (row.time >= destroy->time + 1.0) sum += row.drr, ++n;
    return sum / n;
  };
  CHECK(std::abs(tail_mean(r) - tail_mean(p)) < 0.02);
  CHECK(std::abs(tail_mean(r) - 0.93) < 0.03);
}

TEST_CASE("parse_axis") {
  const auto a = parse_axis("attack.tx_pps=500,1000");
  CHECK(a.key == "attack.tx_pps");
  CHECK(a.values == std::vector<std::string>{"500", "1000"});
  CHECK(parse_axis("cvguard.enabled=true").values.size() == 1);
  CHECK_THROWS(parse_axis("attack.tx_pps"));
  CHECK_THROWS(parse_axis("=1,2"));
  CHECK_THROWS(parse_axis("attack.tx_pps=1,,2"));
  CHECK_THROWS(parse_axis("attack.tx_pps="));
}

TEST_CASE("degenerate sweep equals run") {
  const auto doc = read_json_file(source_config("detection.json"));
  const auto cfg = scenario_from_json(doc);
  const auto table = sweep(doc, {parse_axis("attack.n_attackers=3")}, {cfg.seed});
  REQUIRE(table.rows.size() == 3);
  CHECK(table.rows[0].label == std::to_string(cfg.seed));
  const auto direct = summary_values(run(cfg).summary);
  CHECK(same_values(table.rows[0].values, direct));
  CHECK(same_values(table.rows[1].values, direct));  // mean of one row
}

TEST_CASE("sweep ordering and exact mean rows") {
  auto doc = read_json_file(source_config("fig3.json"));
  set_dotted(doc, "scenario.duration", "3");
  const auto seeds = sweep_seeds(7, 3);
  CHECK(seeds.size() == 3);
  CHECK(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == 3);
  const auto table = sweep(doc, {parse_axis("attack.n_attackers=2,0,10,1"),
                                 parse_axis("attack.tx_pps=1000,500")}, seeds);
  CHECK(table.keys == std::vector<std::string>{"attack.n_attackers", "attack.tx_pps"});
  REQUIRE(table.rows.size() == 4 * 2 * 5);
  std::vector<std::vector<std::string>> points;
  for (std::size_t i = 0; i < table.rows.size(); i += 5) points.push_back(table.rows[i].point);
  const std::vector<std::vector<std::string>> expected = {
      {"0", "500"}, {"0", "1000"}, {"1", "500"}, {"1", "1000"},
      {"2", "500"}, {"2", "1000"}, {"10", "500"}, {"10", "1000"}};
  CHECK(points == expected);
  for (std::size_t i = 0; i < table.rows.size(); i += 5) {
    CHECK(table.rows[i + 3].label == "mean");
    CHECK(table.rows[i + 4].label == "stddev");
    for (std::size_t c = 0; c < summary_columns().size(); ++c) {
      const double sum = table.rows[i].values[c] + table.rows[i + 1].values[c] + table.rows[i + 2].values[c];
      const double m = table.rows[i + 3].values[c];
      if (std::isnan(sum)) CHECK(std::isnan(m));
      else CHECK(m == sum / 3.0);
    }
  }
  const auto path = scratch("sweep") / "sweep.csv";
  write_sweep(table, path);
  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("attack.n_attackers,attack.tx_pps,seed,", 0) == 0);
}

TEST_CASE("legit delivery falls as attackers are added") {
  auto doc = read_json_file(source_config("fig3.json"));
  set_dotted(doc, "scenario.duration", "5");
  const auto table = sweep(doc, {parse_axis("attack.n_attackers=0,1,2,3,4,5")}, {1});
  double prev = 2.0;
  for (const auto& row : table.rows) {
    if (row.label != "mean") continue;
    CHECK(row.values[2] < prev);
    prev = row.values[2];
  }
}

TEST_CASE("feasibility report") {
  const auto text = feasibility_report(ChannelConfig{});
  CHECK(text.find("12.68") != std::string::npos);
  CHECK(text.find("13") != std::string::npos);
  CHECK(text.find("2.83") != std::string::npos);
  CHECK(text.find("min(N_attackers) = 3") != std::string::npos);

  ChannelConfig sym;
  sym.sch_fraction = 1.0;
  sym.sender_rate = sym.receiver_rate;
  sym.overhead = 0.0;
  CHECK(min_attackers(sym).ceiling == 1);

  ChannelConfig half;
  half.sch_fraction = 0.23;
  CHECK(min_attackers(ChannelConfig{}).bound == doctest::Approx(2.0 * min_attackers(half).bound));
}
