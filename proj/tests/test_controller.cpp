#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "cvguard/controller.hpp"

using namespace cvguard;

namespace {

// RSUs 0 - 1 - 2 on a line.
TopologyConfig line3(std::uint32_t self = 1) {
  TopologyConfig t;
  t.rsu_id = self;
  t.rsus = {0, 1, 2};
  t.links = {{0, 1}, {1, 2}};
  return t;
}

CvguardConfig guard() {
  auto c = ScenarioConfig::defaults().cvguard;
  c.enabled = true;
  return c;
}

AttackReport ddos(std::uint64_t window = 0) {
  return AttackReport{std::string(kDdosLabel), {VehicleId{1000}, VehicleId{1001}}, window, {}};
}

MitigationFacts facts() { return MitigationFacts{1.0, 20.0, 465.0, 50}; }

std::size_t count(const Controller& c, ActionKind k) {
  return std::count_if(c.actions().begin(), c.actions().end(),
                       [&](const ControllerAction& a) { return a.kind == k; });
}

}  // namespace

TEST_CASE("provisioning the same policy leaves state unchanged") {
  Controller c(line3(), guard());
  const auto before = c.policy(1);
  CHECK_FALSE(c.provision_policy(1, before, 0.0));
  CHECK(c.actions().empty());
  CHECK(c.policy(1) == before);

  auto tighter = before;
  tighter.rules[RuleKind::E].threshold = 12.0;
  CHECK(c.provision_policy(1, tighter, 3.0));
  CHECK(c.policy(1).c1() == 12.0);
  CHECK(c.policy(0).c1() == before.c1());
  CHECK(count(c, ActionKind::Provision) == 1);
}

TEST_CASE("unknown RSU is rejected") {
  Controller c(line3(), guard());
  CHECK_THROWS_AS(c.provision_policy(7, c.policy(1)), std::out_of_range);
  CHECK_THROWS_AS(c.policy(7), std::out_of_range);
  CHECK_THROWS_AS(c.on_attack_report(7, ddos(), facts(), 0.0), std::out_of_range);
}

TEST_CASE("first report spawns one instance and notifies the topology neighbors") {
  for (std::uint32_t rsu : {0u, 1u, 2u}) {
    Controller c(line3(rsu), guard());
    const auto inst = c.on_attack_report(rsu, ddos(), facts(), 5.0);
    REQUIRE(inst);
    CHECK(c.active_count() == 1);
    const std::size_t degree = rsu == 1 ? 2 : 1;
    CHECK(c.notifications().size() == degree);
    CHECK(c.neighbors(rsu).size() == degree);
    for (const auto& n : c.notifications()) {
      CHECK(n.from == rsu);
      CHECK(n.to != rsu);
      CHECK(std::abs(static_cast<int>(n.to) - static_cast<int>(rsu)) == 1);
      CHECK(c.prearmed().contains({n.to, std::string(kDdosLabel)}));
    }
    CHECK_FALSE(c.prearmed().contains({rsu, std::string(kDdosLabel)}));
  }
}

TEST_CASE("spawned parameters follow the mitigation math") {
  Controller c(line3(), guard());
  const auto inst = c.on_attack_report(1, ddos(), facts(), 0.0);
  REQUIRE(inst);
  CHECK(inst->params.t_interval == doctest::Approx(0.1));  // 1 m / 20 m/s is under the floor
  CHECK(inst->params.alpha == doctest::Approx(std::min(10.0, 1.0 / 0.1)));
  CHECK(inst->params.cap_rate == doctest::Approx(465.0 / 50.0 < 10.0 ? 10.0 : 465.0 / 50.0));
  CHECK(inst->params.implicated == std::set<VehicleId>{VehicleId{1000}, VehicleId{1001}});

  Controller slow(line3(), guard());
  MitigationFacts f = facts();
  f.d_safe = 30.0;
  f.v_avg = 15.0;
  CHECK(slow.on_attack_report(1, ddos(), f, 0.0)->params.t_interval == doctest::Approx(2.0));

  Controller stalled(line3(), guard());
  f.v_avg.reset();
  CHECK(stalled.on_attack_report(1, ddos(), f, 0.0)->params.t_interval == doctest::Approx(0.1));
}

TEST_CASE("duplicate report refreshes instead of spawning") {
  Controller c(line3(), guard());
  REQUIRE(c.on_attack_report(1, ddos(0), facts(), 1.0));
  CHECK_FALSE(c.on_attack_report(1, ddos(1), facts(), 1.1));
  CHECK(c.active_count() == 1);
  CHECK(c.active(1, std::string(kDdosLabel))->last_confirmed == 1.1);
  CHECK(c.active(1, std::string(kDdosLabel))->spawned_at == 1.0);
  CHECK(count(c, ActionKind::Spawn) == 1);
  CHECK(count(c, ActionKind::Refresh) == 1);
  CHECK(c.notifications().size() == 2);

  // A different class on the same RSU is a separate instance.
  AttackReport x{std::string(kXTypeLabel), {VehicleId{3}}, 2, {}};
  CHECK(c.on_attack_report(1, x, facts(), 1.2));
  CHECK(c.active_count() == 2);
}

TEST_CASE("quiet period destroys the instance") {
  auto cfg = guard();
  cfg.quiet_period = 2.0;
  Controller c(line3(), cfg);
  c.on_attack_report(1, ddos(), facts(), 1.0);
  c.refresh(1, std::string(kDdosLabel), 1.5);
  CHECK(c.expire(3.4).empty());
  const auto gone = c.expire(3.5);
  REQUIRE(gone.size() == 1);
  CHECK(gone[0].rsu == 1);
  CHECK(c.active_count() == 0);
  CHECK(c.active(1, std::string(kDdosLabel)) == nullptr);
  CHECK(count(c, ActionKind::Destroy) == 1);
  // A new report after expiry spawns afresh.
  CHECK(c.on_attack_report(1, ddos(), facts(), 4.0));
}

TEST_CASE("mitigation is active only between confirmation and expiry") {
  auto cfg = guard();
  Controller c(line3(), cfg);
  std::mt19937_64 rng(12);
  std::vector<double> confirmations;
  for (int w = 0; w < 600; ++w) {
    const double now = w * 0.1;
    if (rng() % 10 == 0) {
      c.on_attack_report(1, ddos(w), facts(), now);
      confirmations.push_back(now);
    }
    c.expire(now);
    const bool recent = std::any_of(confirmations.begin(), confirmations.end(), [&](double t) {
      return t <= now && now - t < cfg.quiet_period - 1e-9;
    });
    CHECK((c.active(1, std::string(kDdosLabel)) != nullptr) == recent);
  }
}

TEST_CASE("controller actions are deterministic") {
  auto drive = [] {
    Controller c(line3(), guard());
    std::mt19937_64 rng(99);
    for (int w = 0; w < 400; ++w) {
      const std::uint32_t rsu = rng() % 3;
      if (rng() % 7 == 0) c.on_attack_report(rsu, ddos(w), facts(), w * 0.1);
      c.expire(w * 0.1);
    }
    return c.actions();
  };
  const auto a = drive(), b = drive();
  CHECK(a == b);
  CHECK_FALSE(a.empty());
}

TEST_CASE("no self notification on a topology with a self loop") {
  auto t = line3();
  t.links.push_back({1, 1});
  Controller c(t, guard());
  c.on_attack_report(1, ddos(), facts(), 0.0);
  for (const auto& n : c.notifications()) CHECK(n.to != 1);
  CHECK(c.notifications().size() == 2);
}

TEST_CASE("single RSU with no links notifies nobody") {
  Controller c(TopologyConfig{}, guard());
  REQUIRE(c.on_attack_report(0, ddos(), facts(), 0.0));
  CHECK(c.notifications().empty());
}

TEST_CASE("tightened C1 applies from the next window onward") {
  // Differential check: same traffic, one box re-provisioned at window 3.
  WorldFacts wf;
  wf.window = 1.0;
  auto cfg = guard();
  Controller ctl(TopologyConfig{}, cfg);
  MicroBox steady(wf, cfg.policy, 3, 1.0), tuned(wf, cfg.policy, 3, 1.0);
  auto tighter = cfg.policy;
  tighter.rules[RuleKind::E].threshold = 12.0;
  for (std::uint64_t w = 0; w < 8; ++w) {
    std::vector<Bsm> win;
    for (int k = 0; k < 13; ++k)
      win.push_back(Bsm{VehicleId{1}, w + k / 13.0, {0.0, 0.0}, {10.0, 0.0}, 220});
    if (w == 3) {
      REQUIRE(ctl.provision_policy(0, tighter, static_cast<double>(w)));
      tuned.provision(ctl.policy(0));
    }
    const auto a = steady.observe_window(w, static_cast<double>(w), win);
    const auto b = tuned.observe_window(w, static_cast<double>(w), win);
    auto has_e = [](const auto& r) {
      return std::any_of(r.violations.begin(), r.violations.end(),
                         [](const Violation& v) { return v.rule == RuleKind::E; });
    };
    CAPTURE(w);
    CHECK_FALSE(has_e(a));
    CHECK(has_e(b) == (w >= 3));
  }
}
