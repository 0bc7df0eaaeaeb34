#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "profmon/gaussian.hpp"

namespace profmon {

enum class AggregationRule { Minimum, GeometricMean };

std::string_view to_string(AggregationRule rule) noexcept;
AggregationRule parse_rule(std::string_view name);

/// Per-site conditional p-values of one profile and their aggregate.
struct SiteStatistics {
  std::vector<double> p_values;
  double aggregated = 0.0;
  AggregationRule rule = AggregationRule::GeometricMean;
  std::int64_t time_index = 0;
};

/// Alarm when the aggregated statistic falls strictly below `limit`.
class StoppingRule {
 public:
  StoppingRule(double limit, AggregationRule rule);

  double limit() const noexcept { return limit_; }
  AggregationRule rule() const noexcept { return rule_; }

 private:
  double limit_;
  AggregationRule rule_;
};

/// p[j] = Phi(-|z_j|) with z_j the standardized residual of y_j under its
/// conditional law given the other sites. Each value lies in [1e-300, 0.5].
std::vector<double> site_p_values(const GaussianModel& model, const ProfileSample& y);

/// Minimum, or exp(mean(log p)) for the geometric mean. Throws on empty input.
double aggregate(std::span<const double> p, AggregationRule rule);

SiteStatistics site_statistics(const GaussianModel& model, const ProfileSample& y,
                               AggregationRule rule);

/// Allocation-free scorer for hot loops (bootstrap scoring, replications).
/// Holds a reference to the model, which must outlive it.
class ConditionalScorer {
 public:
  explicit ConditionalScorer(const GaussianModel& model);

  struct Scores {
    double minimum;
    double geometric_mean;

    double get(AggregationRule rule) const noexcept {
      return rule == AggregationRule::Minimum ? minimum : geometric_mean;
    }
  };

  /// Both aggregates for one profile given as a column vector of length n.
  Scores score(const Eigen::Ref<const Eigen::VectorXd>& y);

 private:
  const GaussianModel* model_;
  Eigen::VectorXd inv_sd_;
  Eigen::VectorXd inv_qjj_;
  Eigen::VectorXd residual_;
  Eigen::VectorXd centered_;
};

/// Outcome of one monitoring replication.
///
/// Alarms at t <= changepoint are false alarms; the chart is reset and keeps
/// monitoring. The first alarm after the changepoint is the true alarm. A
/// record without an alarm time and with `truncated` set ran into the cap.
struct RunLengthRecord {
  std::optional<std::int64_t> alarm_time;
  std::vector<std::int64_t> false_alarm_times;
  bool truncated = false;
  std::int64_t changepoint = 0;
};

enum class AlarmMode {
  /// Stop at the first alarm of any kind.
  FirstAlarm,
  /// Record false alarms and keep going until a true alarm or the cap.
  MultiAlarm,
};

using ProfileSource = std::function<ProfileSample(std::int64_t time_index)>;
using AlarmTest = std::function<bool(const ProfileSample&)>;

/// Runs several charts over one shared stream; each profile is fetched once
/// per time step and offered to every chart still running.
std::vector<RunLengthRecord> run_monitors(std::span<const AlarmTest> alarms,
                                          const ProfileSource& source, std::int64_t cap,
                                          std::int64_t changepoint = 0,
                                          AlarmMode mode = AlarmMode::FirstAlarm);

/// Generic stopping loop over t = 1..cap used by every chart.
RunLengthRecord run_monitor(const AlarmTest& alarm, const ProfileSource& source,
                            std::int64_t cap, std::int64_t changepoint = 0,
                            AlarmMode mode = AlarmMode::FirstAlarm);

/// Stopping time inf{i : aggregated_i < r} of the conditional p-value chart.
RunLengthRecord monitor_stream(const GaussianModel& model, const ProfileSource& source,
                               const StoppingRule& stop, std::int64_t cap,
                               std::int64_t changepoint = 0,
                               AlarmMode mode = AlarmMode::FirstAlarm);

}  // namespace profmon
