#include "profmon/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "profmon/error.hpp"
#include "profmon/normal.hpp"

namespace profmon {

std::string_view to_string(AggregationRule rule) noexcept {
  return rule == AggregationRule::Minimum ? "minimum" : "geometric_mean";
}

AggregationRule parse_rule(std::string_view name) {
  if (name == "minimum" || name == "min") {
    return AggregationRule::Minimum;
  }
  if (name == "geometric_mean" || name == "geometric" || name == "geo") {
    return AggregationRule::GeometricMean;
  }
  throw Error(ErrorCode::Parse, "unknown aggregation rule '" + std::string(name) + "'");
}

StoppingRule::StoppingRule(double limit, AggregationRule rule) : limit_(limit), rule_(rule) {
  if (!(limit > 0.0 && limit < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "StoppingRule: limit must lie in (0, 1)");
  }
}

std::vector<double> site_p_values(const GaussianModel& model, const ProfileSample& y) {
  const auto laws = conditional_laws(model, y);
  std::vector<double> p(laws.size());
  for (std::size_t j = 0; j < laws.size(); ++j) {
    const double z = (y.values(static_cast<Eigen::Index>(j)) - laws[j].cond_mean) /
                     std::sqrt(laws[j].cond_var);
    p[j] = normal_min_tail(z);
  }
  return p;
}

double aggregate(std::span<const double> p, AggregationRule rule) {
  if (p.empty()) {
    throw Error(ErrorCode::EmptyInput, "aggregate: empty p-value vector");
  }
  if (rule == AggregationRule::Minimum) {
    return *std::min_element(p.begin(), p.end());
  }
  double log_sum = 0.0;
  for (const double v : p) {
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(p.size()));
}

SiteStatistics site_statistics(const GaussianModel& model, const ProfileSample& y,
                               AggregationRule rule) {
  SiteStatistics s;
  s.p_values = site_p_values(model, y);
  s.aggregated = aggregate(s.p_values, rule);
  s.rule = rule;
  s.time_index = y.time_index;
  return s;
}

ConditionalScorer::ConditionalScorer(const GaussianModel& model)
    : model_(&model),
      inv_sd_(static_cast<Eigen::Index>(model.dim())),
      inv_qjj_(static_cast<Eigen::Index>(model.dim())),
      residual_(static_cast<Eigen::Index>(model.dim())),
      centered_(static_cast<Eigen::Index>(model.dim())) {
  for (Eigen::Index j = 0; j < inv_sd_.size(); ++j) {
    const double qjj = model.precision()(j, j);
    const double var = std::max(1.0 / qjj, GaussianModel::kVarianceFloor * model.covariance()(j, j));
    inv_qjj_(j) = 1.0 / qjj;
    inv_sd_(j) = 1.0 / std::sqrt(var);
  }
}

ConditionalScorer::Scores ConditionalScorer::score(const Eigen::Ref<const Eigen::VectorXd>& y) {
  centered_.noalias() = y - model_->mean();
  residual_.noalias() = model_->precision() * centered_;
  double minimum = 1.0;
  double log_sum = 0.0;
  for (Eigen::Index j = 0; j < residual_.size(); ++j) {
    const double p = normal_min_tail(residual_(j) * inv_qjj_(j) * inv_sd_(j));
    minimum = std::min(minimum, p);
    log_sum += std::log(p);
  }
  return Scores{minimum, std::exp(log_sum / static_cast<double>(residual_.size()))};
}

std::vector<RunLengthRecord> run_monitors(std::span<const AlarmTest> alarms,
                                          const ProfileSource& source, std::int64_t cap,
                                          std::int64_t changepoint, AlarmMode mode) {
  if (cap < 1) {
    throw Error(ErrorCode::InvalidArgument, "run_monitor: cap must be >= 1");
  }
  if (changepoint < 0) {
    throw Error(ErrorCode::InvalidArgument, "run_monitor: changepoint must be >= 0");
  }
  std::vector<RunLengthRecord> records(alarms.size());
  std::vector<bool> active(alarms.size(), true);
  std::size_t remaining = alarms.size();
  for (auto& r : records) {
    r.changepoint = changepoint;
  }
  for (std::int64_t t = 1; t <= cap && remaining > 0; ++t) {
    const ProfileSample y = source(t);
    for (std::size_t c = 0; c < alarms.size(); ++c) {
      if (!active[c] || !alarms[c](y)) {
        continue;
      }
      if (t > changepoint) {
        records[c].alarm_time = t;
      } else {
        records[c].false_alarm_times.push_back(t);
        if (mode == AlarmMode::MultiAlarm) {
          continue;
        }
      }
      active[c] = false;
      --remaining;
    }
  }
  for (std::size_t c = 0; c < alarms.size(); ++c) {
    records[c].truncated = active[c];
  }
  return records;
}

RunLengthRecord run_monitor(const AlarmTest& alarm, const ProfileSource& source, std::int64_t cap,
                            std::int64_t changepoint, AlarmMode mode) {
  return run_monitors(std::span<const AlarmTest>(&alarm, 1), source, cap, changepoint, mode)
      .front();
}

RunLengthRecord monitor_stream(const GaussianModel& model, const ProfileSource& source,
                               const StoppingRule& stop, std::int64_t cap,
                               std::int64_t changepoint, AlarmMode mode) {
  ConditionalScorer scorer(model);
  const AlarmTest alarm = [&](const ProfileSample& y) {
    check_profile(model, y);
    return scorer.score(y.values).get(stop.rule()) < stop.limit();
  };
  return run_monitor(alarm, source, cap, changepoint, mode);
}

}  // namespace profmon
