#pragma once

// Brute-force rule checker and small-grid context generator, written
// independently of the rule engine so the two can be compared.

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "cvguard/microbox.hpp"

namespace oracle {

using cvguard::Observation;
using cvguard::PolicySet;
using cvguard::RuleKind;
using cvguard::SenderContext;
using cvguard::VehicleId;
using cvguard::WorldFacts;

struct Case {
  std::vector<SenderContext> contexts;
  WorldFacts facts;
  PolicySet policy;
};

// (rule letter, sender id or -1 for window-wide)
using Finding = std::pair<char, std::int64_t>;

inline double len(double x, double y) { return std::sqrt(x * x + y * y); }

inline double seg_dist(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double l2 = dx * dx + dy * dy;
  double t = l2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / l2 : 0.0;
  t = t < 0 ? 0 : (t > 1 ? 1 : t);
  return len(px - (ax + t * dx), py - (ay + t * dy));
}

inline std::set<Finding> brute_force(RuleKind rule, const Case& c) {
  std::set<Finding> out;
  const char letter = static_cast<char>('A' + static_cast<int>(rule));
  if (!c.policy.rules.contains(rule)) return out;
  const double thr = c.policy.rules.at(rule).threshold;
  const auto& f = c.facts;
  const auto rate = [&](const SenderContext& s) { return s.delivered / f.window; };
  const auto add = [&](const SenderContext& s) { out.insert({letter, s.sender.value}); };

  for (const auto& s : c.contexts) {
    bool hit = false;
    switch (rule) {
      case RuleKind::A:
        for (const auto& r : s.reports)
          hit |= len(r.position.x - f.rsu.position.x, r.position.y - f.rsu.position.y) >=
                 f.rsu.comm_range;
        break;
      case RuleKind::B:
        for (const auto& r : s.reports) {
          const auto& M = f.road.major_axis;
          const auto& m = f.road.minor_axis;
          const double d1 = seg_dist(r.position.x, r.position.y, M.start.x, M.start.y, M.end.x, M.end.y);
          const double d2 = seg_dist(r.position.x, r.position.y, m.start.x, m.start.y, m.end.x, m.end.y);
          hit |= (d1 < d2 ? d1 : d2) > thr;
        }
        break;
      case RuleKind::C: {
        std::vector<Observation> seq;
        if (s.previous) seq.push_back(*s.previous);
        seq.insert(seq.end(), s.reports.begin(), s.reports.end());
        for (std::size_t i = 1; i < seq.size(); ++i) {
          double ticks = std::round((seq[i].timestamp - seq[i - 1].timestamp) / f.tick);
          if (ticks < 1) ticks = 1;
          const double grow = len(seq[i].position.x, seq[i].position.y) -
                              len(seq[i - 1].position.x, seq[i - 1].position.y);
          hit |= grow > thr * ticks;
        }
        break;
      }
      case RuleKind::D:
        if (s.reports.empty()) break;
        for (const auto& o : c.contexts) {
          if (o.sender == s.sender || o.reports.empty()) continue;
          const auto& p = s.reports.back().position;
          const auto& q = o.reports.back().position;
          hit |= len(p.x - q.x, p.y - q.y) <= thr;
        }
        break;
      case RuleKind::E: hit = rate(s) > thr; break;
      case RuleKind::F: hit = s.known && rate(s) < thr; break;
      case RuleKind::H: hit = static_cast<double>(s.neighbor_count) > thr; break;
      case RuleKind::I:
        if (s.reports.empty()) break;
        for (const auto& o : c.contexts) {
          if (o.sender == s.sender || o.reports.empty()) continue;
          const auto& p = s.reports.back().position;
          const auto& q = o.reports.back().position;
          bool listed = false;
          for (auto id : s.claimed_neighbors) listed |= id == o.sender;
          hit |= (len(p.x - q.x, p.y - q.y) < thr) != listed;
        }
        break;
      case RuleKind::J:
        for (const auto& r : s.reports) {
          const double v = len(r.speed_vec.x, r.speed_vec.y);
          hit |= v < f.road.speed_min || v > f.road.speed_max;
        }
        break;
      case RuleKind::K: hit = s.last_seen - s.first_seen > thr; break;
      default: break;
    }
    if (hit) add(s);
  }

  if (rule == RuleKind::F && c.policy.aggregate_starvation) {
    const bool e_on = c.policy.rules.contains(RuleKind::E);
    const double c1 = e_on ? c.policy.rules.at(RuleKind::E).threshold : 0.0;
    double sum = 0;
    int n = 0;
    for (const auto& s : c.contexts) {
      if (!s.known || (e_on && rate(s) > c1)) continue;
      sum += rate(s);
      ++n;
    }
    if (n > 0 && sum / n < thr) out.insert({letter, -1});
  }
  if (rule == RuleKind::G) {
    int active = 0;
    for (const auto& s : c.contexts) active += s.delivered > 0 ? 1 : 0;
    if (active > thr) out.insert({letter, -1});
  }
  return out;
}

inline std::set<Finding> engine(RuleKind rule, const Case& c) {
  std::set<Finding> out;
  for (const auto& v : cvguard::evaluate_rules(c.contexts, c.facts, c.policy))
    if (v.rule == rule)
      out.insert({static_cast<char>('A' + static_cast<int>(v.rule)),
                  v.sender ? static_cast<std::int64_t>(v.sender->value) : -1});
  return out;
}

inline Case base_case() {
  Case c;
  c.facts.window = 0.1;
  c.facts.tick = 0.1;
  c.policy = PolicySet::defaults(3.6, 4.0);
  return c;
}

inline SenderContext sender(std::uint32_t id) {
  SenderContext s;
  s.sender = VehicleId{id};
  return s;
}

inline SenderContext reporting(std::uint32_t id, double x, double y, double vx = 10.0,
                               double vy = 0.0, double t = 0.0) {
  SenderContext s = sender(id);
  s.reports.push_back({t, {x, y}, {vx, vy}});
  s.delivered = 1;
  s.first_seen = s.last_seen = t;
  return s;
}

/// Mixed-radix digit helper.
struct Digits {
  std::size_t n;
  std::size_t take(std::size_t radix) {
    const std::size_t d = n % radix;
    n /= radix;
    return d;
  }
};

struct Grid {
  RuleKind rule;
  std::size_t size;
  std::function<Case(std::size_t)> make;
};

inline std::vector<Grid> grids() {
  std::vector<Grid> g;

  {  // A: two senders around the RSU, boundary at 300 m on the grid.
    static const std::vector<double> xs = [] {
      std::vector<double> v;
      for (int i = -14; i <= 14; ++i) v.push_back(25.0 * i);
      return v;
    }();
    static const std::vector<double> ys = {-350, -300, -250, -200, -150, -100, -50, 0,
                                           50,   100,  150,  200,  250,  300,  350};
    g.push_back({RuleKind::A, xs.size() * ys.size() * xs.size(), [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   const double x1 = xs[d.take(xs.size())], y1 = ys[d.take(ys.size())];
                   const double x2 = xs[d.take(xs.size())];
                   c.contexts = {reporting(1, x1, y1), reporting(2, x2, 0.0)};
                   return c;
                 }});
  }
  {  // B: points near both axes and their ends, half-width 4.
    static const std::vector<double> xs = {-300, -290, -285, -284, -280, -279, -50, -4.5, -4,
                                           -3.5, 0,    3.5,  4,    4.5,  50,   59,  60,   61,
                                           64,   65,   279,  280,  281,  284,  285, 290};
    static const std::vector<double> ys = {-130, -125, -124, -121, -120, -119, -10, -4.5,
                                           -4,   -3.9, 0,    3.9,  4,    4.1,  4.5, 10,
                                           59,   60,   61,   64,   64.5, 65,   70};
    g.push_back({RuleKind::B, xs.size() * ys.size() * 20, [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   const double x1 = xs[d.take(xs.size())], y1 = ys[d.take(ys.size())];
                   const double y2 = ys[d.take(20)];
                   c.contexts = {reporting(1, x1, y1), reporting(2, 2.0, y2)};
                   return c;
                 }});
  }
  {  // C: radial growth between previous and two reports, delta 3.6 m per tick.
    static const std::vector<double> r0s = {0, 10, 100, 250};
    static const std::vector<double> steps = {-5, -3.6, 0, 1, 3.5, 3.6, 3.7, 7.1, 7.2, 7.3, 10, 11};
    static const std::vector<double> dts = {0.1, 0.2, 0.3, 0.5};
    g.push_back({RuleKind::C, 2 * r0s.size() * steps.size() * dts.size() * steps.size() * dts.size(),
                 [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   const bool has_prev = d.take(2) == 1;
                   const double r0 = r0s[d.take(r0s.size())];
                   const double s1 = steps[d.take(steps.size())];
                   const double t1 = dts[d.take(dts.size())];
                   const double s2 = steps[d.take(steps.size())];
                   const double t2 = t1 + dts[d.take(dts.size())];
                   SenderContext s = sender(1);
                   if (has_prev) s.previous = Observation{0.0, {r0, 0.0}, {10, 0}};
                   s.reports.push_back({t1, {r0 + s1, 0.0}, {10, 0}});
                   s.reports.push_back({t2, {0.0, r0 + s1 + s2}, {10, 0}});
                   s.delivered = 2;
                   s.first_seen = 0.0;
                   s.last_seen = t2;
                   c.contexts = {s};
                   return c;
                 }});
  }
  {  // D: three senders on a line, epsilon 2 m.
    static const std::vector<double> xs = {0,   0.5, 1,   1.5, 1.9, 2,   2.1, 2.5, 3,
                                           3.5, 3.9, 4,   4.1, 4.5, 5,   5.5, 6,   6.1,
                                           7,   8,   9,   10,  20,  30,  40};
    g.push_back({RuleKind::D, xs.size() * xs.size() * xs.size(), [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   c.contexts = {reporting(1, xs[d.take(xs.size())], 0.0),
                                 reporting(2, xs[d.take(xs.size())], 0.0),
                                 reporting(3, xs[d.take(xs.size())], 0.0)};
                   return c;
                 }});
  }
  {  // E: delivered counts over a 1 s window, C1 = 15.
    g.push_back({RuleKind::E, 101 * 101, [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   c.facts.window = 1.0;
                   auto a = sender(1), b = sender(2);
                   a.delivered = static_cast<std::uint32_t>(d.take(101));
                   b.delivered = static_cast<std::uint32_t>(d.take(101));
                   c.contexts = {a, b};
                   return c;
                 }});
  }
  {  // F: three senders, known or not, delivered 0..20 over 1 s, C2 = 5.
    g.push_back({RuleKind::F, 42 * 42 * 42, [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   c.facts.window = 1.0;
                   for (std::uint32_t id = 1; id <= 3; ++id) {
                     auto s = sender(id);
                     s.delivered = static_cast<std::uint32_t>(d.take(21));
                     s.known = d.take(2) == 1;
                     c.contexts.push_back(s);
                   }
                   return c;
                 }});
  }
  {  // G: up to nine senders active or silent, capacity 4.
    g.push_back({RuleKind::G, 29524, [](std::size_t i) {
                   Case c = base_case();
                   c.policy.rules[RuleKind::G].threshold = 4;
                   std::size_t n = 0, base = 1;
                   while (i >= base) {
                     i -= base;
                     ++n;
                     base *= 3;
                   }
                   Digits d{i};
                   for (std::uint32_t id = 1; id <= n; ++id) {
                     auto s = sender(id);
                     s.delivered = static_cast<std::uint32_t>(d.take(3));
                     c.contexts.push_back(s);
                   }
                   return c;
                 }});
  }
  {  // H: neighbor counts 0..110, capacity 100.
    g.push_back({RuleKind::H, 111 * 111, [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   auto a = sender(1), b = sender(2);
                   a.neighbor_count = d.take(111);
                   b.neighbor_count = d.take(111);
                   c.contexts = {a, b};
                   return c;
                 }});
  }
  {  // I: three senders on a line and every claimed-neighbor subset, mu 100.
    static const std::vector<double> xs = {0, 50, 99.9, 100, 150};
    g.push_back({RuleKind::I, 5 * 5 * 5 * 4 * 4 * 4 * 2, [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   for (std::uint32_t id = 1; id <= 3; ++id)
                     c.contexts.push_back(reporting(id, xs[d.take(5)], 0.0));
                   for (std::uint32_t id = 1; id <= 3; ++id) {
                     const std::size_t mask = d.take(4);
                     std::vector<VehicleId> others;
                     for (std::uint32_t o = 1; o <= 3; ++o)
                       if (o != id) others.push_back(VehicleId{o});
                     auto& s = c.contexts[id - 1];
                     if (mask & 1) s.claimed_neighbors.push_back(others[0]);
                     if (mask & 2) s.claimed_neighbors.push_back(others[1]);
                   }
                   if (d.take(2) == 1) c.contexts[0].claimed_neighbors.push_back(VehicleId{99});
                   return c;
                 }});
  }
  {  // J: speed vectors around [2, 30].
    static const std::vector<double> vx = {-31, -30, -29.9, -2, -1.9, 0, 1.9, 2, 2.1, 29.9, 30, 31};
    static const std::vector<double> vy = {-18, -1, 0, 0.5, 1, 1.2, 18, 24, 25};
    g.push_back({RuleKind::J, vx.size() * vy.size() * vx.size() * vy.size(), [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   c.facts.road.speed_min = 2.0;
                   c.facts.road.speed_max = 30.0;
                   const double ax = vx[d.take(vx.size())], ay = vy[d.take(vy.size())];
                   const double bx = vx[d.take(vx.size())], by = vy[d.take(vy.size())];
                   c.contexts = {reporting(1, 0, 0, ax, ay), reporting(2, 50, 0, bx, by)};
                   return c;
                 }});
  }
  {  // K: dwell times around tau = 300 s.
    static const std::vector<double> firsts = {0, 10, 100};
    static const std::vector<double> dwell = {0,   25,  50,  100, 200,   250, 275,     299,
                                              299.9, 300, 300.1, 301, 325, 350, 400, 1000};
    const std::size_t per = firsts.size() * dwell.size();
    g.push_back({RuleKind::K, per * per * per, [](std::size_t i) {
                   Digits d{i};
                   Case c = base_case();
                   for (std::uint32_t id = 1; id <= 3; ++id) {
                     auto s = sender(id);
                     s.first_seen = firsts[d.take(firsts.size())];
                     s.last_seen = s.first_seen + dwell[d.take(dwell.size())];
                     c.contexts.push_back(s);
                   }
                   return c;
                 }});
  }
  return g;
}

struct GridResult {
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  std::size_t unsound = 0;
};

inline GridResult check_grid(const Grid& g) {
  GridResult r;
  for (std::size_t i = 0; i < g.size; ++i) {
    const Case c = g.make(i);
    ++r.cases;
    if (brute_force(g.rule, c) != engine(g.rule, c)) ++r.mismatches;
    for (const auto& v : cvguard::evaluate_rules(c.contexts, c.facts, c.policy))
      if (!cvguard::violation_is_sound(v, c.facts)) ++r.unsound;
  }
  return r;
}

}  // namespace oracle
