#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "profmon/calibration.hpp"
#include "profmon/competitors.hpp"
#include "profmon/monitor.hpp"
#include "profmon/processes.hpp"

namespace profmon {

struct Scenario {
  ProcessSpec in_control;
  ProcessSpec out_of_control;

  bool operator==(const Scenario&) const = default;
};

enum class ChartKind { Proposed, HotellingT2, Pca };

std::string_view to_string(ChartKind kind) noexcept;
ChartKind parse_chart(std::string_view name);

/// One simulated scenario. Desk-scale defaults; see paper_scale().
struct ExperimentConfig {
  Scenario scenario;
  MonitorGrid grid;
  std::size_t m = 1000;
  std::size_t arl0 = 200;
  BootstrapPlan plan;  // plan.arl0 is overridden by arl0
  std::vector<AggregationRule> rules{AggregationRule::Minimum, AggregationRule::GeometricMean};
  std::size_t reps = 200;
  std::int64_t cap = 5000;
  std::int64_t changepoint = 100;
  std::uint64_t seed = 1;

  std::vector<ChartKind> charts{ChartKind::Proposed, ChartKind::HotellingT2};
  double pca_variance_fraction = 0.9;
  /// In-control draws per replication used to calibrate competitor limits.
  std::size_t competitor_draws = 20000;
  /// Competitors are matched to the false-alarm rate observed for this rule.
  AggregationRule far_reference_rule = AggregationRule::GeometricMean;

  /// Simulation study 1, 2 or 3 at shift xi with desk-scale settings.
  static ExperimentConfig for_study(int study, double xi);
  /// reps 1000, arl0 1000, cap 25000, changepoint 500, b2 20.
  void paper_scale();
  BootstrapPlan effective_plan() const;
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

struct ChartSummary {
  ChartKind chart = ChartKind::Proposed;
  std::optional<AggregationRule> rule;
  std::size_t replications = 0;
  std::size_t true_alarms = 0;
  std::size_t false_alarms = 0;
  std::size_t truncated = 0;
  std::size_t calibration_failures = 0;
  /// Mean of (t* - tau) over replications that raised a true alarm.
  std::optional<double> arl1_hat;
  std::optional<double> arl1_se;
  std::optional<double> arl1_sd;
  /// False alarms / all alarms, pooled over replications.
  std::optional<double> far_hat;
  /// Set when truncated replications were dropped from arl1_hat.
  bool arl1_lower_bound = false;
  std::optional<double> mean_limit;
  /// Per-step in-control alarm probability the limit was calibrated to
  /// (competitor charts only).
  std::optional<double> target_alarm_prob;

  bool operator==(const ChartSummary&) const = default;
};

struct CsvSource {
  std::string historical_path;
  std::string online_path;
  std::size_t historical_count = 0;
  std::size_t online_count = 0;
  std::size_t sites = 0;

  bool operator==(const CsvSource&) const = default;
};

struct ScenarioReport {
  std::string mode;  // "simulate" or "monitor-csv"
  ExperimentConfig config;
  std::optional<CsvSource> csv;
  std::optional<double> xi;
  std::vector<ChartSummary> charts;

  const ChartSummary& find(ChartKind chart, std::optional<AggregationRule> rule = {}) const;

  bool operator==(const ScenarioReport&) const = default;
};

/// Replication r draws m in-control historical profiles, calibrates every
/// configured chart, then monitors one common stream (in control through the
/// changepoint, out of control after) until a true alarm or the cap. False
/// alarms are recorded and the chart continues. Replication streams derive
/// from (seed, r) only, so the report is independent of `workers`.
ScenarioReport run_scenario(const ExperimentConfig& config, std::size_t workers = 1);

/// Sample ARL / SD table of the order-statistic chart per (distribution, m).
std::vector<GeometricLimitReport> runlength_verify(
    const std::vector<ReferenceDistribution>& distributions,
    const std::vector<std::size_t>& m_values, std::size_t arl0, std::size_t reps,
    std::uint64_t seed, std::size_t workers = 1);

std::string runlength_csv(const std::vector<GeometricLimitReport>& rows);

struct MonitorCsvConfig {
  std::size_t arl0 = 200;
  BootstrapPlan plan;
  std::vector<AggregationRule> rules{AggregationRule::Minimum, AggregationRule::GeometricMean};
  std::size_t reps = 200;
  std::int64_t cap = 5000;
  /// Profiles 1..changepoint are permuted historical (in-control) profiles.
  std::int64_t changepoint = 0;
  std::uint64_t seed = 1;
};

/// Calibrates on the historical file, then per replication streams a fresh
/// random permutation of the online pool (re-permuting when exhausted).
ScenarioReport monitor_csv(const std::filesystem::path& historical_path,
                           const std::filesystem::path& online_path,
                           const MonitorCsvConfig& config, std::size_t workers = 1);
ScenarioReport monitor_profiles(const std::vector<ProfileSample>& historical,
                                const std::vector<ProfileSample>& online,
                                const MonitorCsvConfig& config, std::size_t workers = 1);

/// Aggregates per-replication records of one chart into a summary.
ChartSummary summarize(ChartKind chart, std::optional<AggregationRule> rule,
                       const std::vector<std::optional<RunLengthRecord>>& records,
                       const std::vector<double>& limits);

// Reports -------------------------------------------------------------------

enum class ReportFormat { Json, Csv };

ReportFormat parse_format(std::string_view name);

std::string emit_report(const ScenarioReport& report, ReportFormat format);
std::string emit_reports(const std::vector<ScenarioReport>& reports, ReportFormat format);
ScenarioReport parse_report(const std::string& json);
std::vector<ScenarioReport> parse_reports(const std::string& json);

ExperimentConfig parse_config(const std::string& json);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string emit_config(const ExperimentConfig& config);

/// {m, m_star, b1, b2, arl0, rule, limit, score_quantiles}
std::string calibration_report(const BootstrapCalibration& calibration, const BootstrapPlan& plan,
                               AggregationRule rule);

}  // namespace profmon
