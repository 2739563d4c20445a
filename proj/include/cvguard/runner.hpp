#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvguard/advisory.hpp"
#include "cvguard/channel.hpp"
#include "cvguard/controller.hpp"
#include "cvguard/kinematics.hpp"
#include "cvguard/microbox.hpp"
#include "cvguard/model.hpp"

namespace cvguard {

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

struct DrrRow {
  std::uint64_t window = 0;
  VehicleId sender;
  std::uint32_t sent = 0;
  std::uint32_t delivered = 0;

  friend bool operator==(const DrrRow&, const DrrRow&) = default;
};

struct AppDrrRow {
  std::uint64_t window = 0;
  double time = 0.0;  // window start
  std::size_t expected_senders = 0;
  std::size_t delivered = 0;
  double drr = 1.0;
  bool attack_active = false;

  friend bool operator==(const AppDrrRow&, const AppDrrRow&) = default;
};

struct ReportRow {
  double time = 0.0;  // window end
  AttackReport report;
  bool first = false;  // first confirmation of a streak

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct Summary {
  std::uint64_t seed = 0;
  std::string config_hash;
  double baseline_drr = 1.0;  // legit delivery before the attack starts
  double attacked_drr = 1.0;  // legit delivery while the attack is active
  double app_drr = 1.0;       // whole run
  std::uint64_t conflicts = 0;
  std::uint64_t crossing_attempts = 0;
  double conflict_pct = 0.0;
  std::uint64_t confirmed_reports = 0;
  std::optional<double> first_detection;  // time of the first confirmed DDoS report

  friend bool operator==(const Summary&, const Summary&) = default;
};

struct AdvisoryRow {
  double time = 0.0;
  Advisory advisory;

  friend bool operator==(const AdvisoryRow&, const AdvisoryRow&) = default;
};

struct RunResult {
  std::vector<DrrRow> drr;
  std::vector<AppDrrRow> app_drr;
  std::vector<ConflictEvent> conflicts;
  std::vector<ReportRow> reports;
  std::vector<Violation> violations;
  std::vector<ControllerAction> actions;
  std::vector<AdvisoryRow> advisories;
  Summary summary;
};

/// Runs one scenario to completion. Throws ValidationError when the config
/// breaks an invariant.
RunResult run(const ScenarioConfig& config);

/// Writes drr.csv, app_drr.csv, conflicts.csv, summary.csv, reports.csv,
/// violations.csv, controller.csv, advisories.csv and manifest.json.
void write_outputs(const RunResult& result, const ScenarioConfig& config,
                   const std::filesystem::path& dir);

/// Summary metrics in CSV column order.
std::vector<std::string> summary_columns();
std::vector<double> summary_values(const Summary& s);

struct SweepAxis {
  std::string key;  // dotted config key, e.g. "attack.tx_pps"
  std::vector<std::string> values;
};

/// Parses "section.key=v1,v2,...".
SweepAxis parse_axis(const std::string& text);

struct SweepRow {
  std::vector<std::string> point;  // one value per axis
  std::string label;               // seed, "mean" or "stddev"
  std::vector<double> values;      // summary_values order
};

struct SweepTable {
  std::vector<std::string> keys;
  std::vector<SweepRow> rows;
};

/// Seeds derive_seed(base, 0..n-1).
std::vector<std::uint64_t> sweep_seeds(std::uint64_t base, std::size_t n);

/// One row per grid point per seed, grid points ordered lexicographically by
/// value (numerically where values are numbers) and then by seed order; each
/// point is followed by its mean and sample standard deviation rows.
SweepTable sweep(const nlohmann::json& base_doc, const std::vector<SweepAxis>& axes,
                 const std::vector<std::uint64_t>& seeds);

void write_sweep(const SweepTable& table, const std::filesystem::path& path);

/// Human-readable attacker-feasibility report for a channel.
std::string feasibility_report(const ChannelConfig& channel);

}  // namespace cvguard
