// Command-line front end: run, sweep, feasibility, validate.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cvguard/config_io.hpp"
#include "cvguard/runner.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
  cvguard::ScenarioConfig cfg = cvguard::load_scenario(config_path);
  if (seed) cfg.seed = *seed;
  const auto result = cvguard::run(cfg);
  cvguard::write_outputs(result, cfg, out_dir);
  const auto& s = result.summary;
  fmt::print("seed {}  hash {}  app_drr {:.4f}  conflicts {}/{} ({:.2f}%)  reports {}\n", s.seed,
             s.config_hash, s.app_drr, s.conflicts, s.crossing_attempts, s.conflict_pct,
             s.confirmed_reports);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& axes_text,
              std::size_t n_seeds, const std::string& out_dir) {
  const auto doc = cvguard::read_json_file(config_path);
  const auto base = cvguard::scenario_from_json(doc);
  std::vector<cvguard::SweepAxis> axes;
  for (const auto& a : axes_text) axes.push_back(cvguard::parse_axis(a));
  const auto table = cvguard::sweep(doc, axes, cvguard::sweep_seeds(base.seed, n_seeds));
  const std::filesystem::path path = std::filesystem::path(out_dir) / "sweep.csv";
  cvguard::write_sweep(table, path);
  fmt::print("{} rows -> {}\n", table.rows.size(), path.string());
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const auto doc = cvguard::read_json_file(config_path);
  const auto cfg = cvguard::scenario_from_json(doc);
  const auto res = cvguard::validate_scenario(cfg);
  if (res.ok()) {
    fmt::print("ok {}\n", cvguard::config_hash(cfg));
    return 0;
  }
  for (const auto& i : res.issues)
    fmt::print(stderr, "{}: violates {} (value {})\n", i.field, i.constraint, i.value);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"V2I DDoS simulator with rule-based detection and sampling mitigation"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run one scenario and write result files");
  run->add_option("--config", config_path, "scenario JSON")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "override scenario.seed");

  std::vector<std::string> axes;
  std::size_t n_seeds = 20;
  auto* sw = app.add_subcommand("sweep", "grid sweep over config keys, several seeds per point");
  sw->add_option("--config", config_path, "base scenario JSON")->required();
  sw->add_option("--axis", axes, "section.key=v1,v2,... (repeatable)");
  sw->add_option("--seeds", n_seeds, "seeds per grid point")->check(CLI::PositiveNumber);
  sw->add_option("--out", out_dir, "output directory")->required();

  cvguard::ChannelConfig channel;
  auto* feas = app.add_subcommand("feasibility", "minimum attacker count that exhausts the RSU");
  feas->add_option("--packet-bytes", channel.packet_bytes)->check(CLI::PositiveNumber);
  feas->add_option("--attacker-bps", channel.sender_rate)->check(CLI::PositiveNumber);
  feas->add_option("--receiver-bps", channel.receiver_rate)->check(CLI::PositiveNumber);
  feas->add_option("--overhead-s", channel.overhead)->check(CLI::NonNegativeNumber);
  feas->add_option("--sch-fraction", channel.sch_fraction)->check(CLI::Range(0.0, 1.0));

  auto* val = app.add_subcommand("validate", "check a scenario file");
  val->add_option("--config", config_path, "scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, seed);
    if (*sw) return cmd_sweep(config_path, axes, n_seeds, out_dir);
    if (*feas) {
      if (!(channel.sch_fraction > 0.0)) throw std::invalid_argument("sch-fraction must be > 0");
      std::cout << cvguard::feasibility_report(channel);
      return 0;
    }
    if (*val) return cmd_validate(config_path);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
