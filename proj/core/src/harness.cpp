#include "profmon/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "profmon/csv.hpp"
#include "profmon/error.hpp"
#include "profmon/parallel.hpp"
#include "profmon/stats.hpp"

namespace profmon {

std::string_view to_string(ChartKind kind) noexcept {
  switch (kind) {
    case ChartKind::Proposed: return "proposed";
    case ChartKind::HotellingT2: return "hotelling_t2";
    case ChartKind::Pca: return "pca";
  }
  return "unknown";
}

ChartKind parse_chart(std::string_view name) {
  for (auto k : {ChartKind::Proposed, ChartKind::HotellingT2, ChartKind::Pca}) {
    if (name == to_string(k)) {
      return k;
    }
  }
  if (name == "t2") {
    return ChartKind::HotellingT2;
  }
  throw Error(ErrorCode::Parse, "unknown chart '" + std::string(name) + "'");
}

ExperimentConfig ExperimentConfig::for_study(int study, double xi) {
  ExperimentConfig c;
  c.scenario = Scenario{study_in_control(study), study_out_of_control(study, xi)};
  c.grid = study_grid(study);
  return c;
}

void ExperimentConfig::paper_scale() {
  reps = 1000;
  arl0 = 1000;
  cap = 25000;
  changepoint = 500;
  plan.b1 = 100;
  plan.b2 = 20;
  competitor_draws = 100000;
}

BootstrapPlan ExperimentConfig::effective_plan() const {
  BootstrapPlan p = plan;
  p.arl0 = arl0;
  if (p.m_star == 0) {
    p.m_star = m / 2;
  }
  return p;
}

void ExperimentConfig::validate() const {
  if (reps < 1) {
    throw Error(ErrorCode::InvalidArgument, "config: reps must be >= 1");
  }
  if (changepoint < 0 || cap <= changepoint) {
    throw Error(ErrorCode::InvalidArgument, "config: need cap > changepoint >= 0");
  }
  if (rules.empty() || charts.empty()) {
    throw Error(ErrorCode::InvalidArgument, "config: rules and charts must be non-empty");
  }
  if (arl0 < 1) {
    throw Error(ErrorCode::InvalidArgument, "config: arl0 must be >= 1");
  }
  scenario.in_control.validate(grid);
  scenario.out_of_control.validate(grid);
}

const ChartSummary& ScenarioReport::find(ChartKind chart,
                                         std::optional<AggregationRule> rule) const {
  for (const auto& c : charts) {
    if (c.chart == chart && c.rule == rule) {
      return c;
    }
  }
  throw Error(ErrorCode::InvalidArgument,
              "report has no entry for chart " + std::string(to_string(chart)));
}

ChartSummary summarize(ChartKind chart, std::optional<AggregationRule> rule,
                       const std::vector<std::optional<RunLengthRecord>>& records,
                       const std::vector<double>& limits) {
  ChartSummary s;
  s.chart = chart;
  s.rule = rule;
  RunningMoments delays;
  for (const auto& rec : records) {
    if (!rec) {
      ++s.calibration_failures;
      continue;
    }
    ++s.replications;
    s.false_alarms += rec->false_alarm_times.size();
    if (rec->alarm_time) {
      ++s.true_alarms;
      delays.push(static_cast<double>(*rec->alarm_time - rec->changepoint));
    } else if (rec->truncated) {
      ++s.truncated;
    }
  }
  if (delays.count() > 0) {
    s.arl1_hat = delays.mean();
  }
  if (delays.count() > 1) {
    s.arl1_se = delays.standard_error();
    s.arl1_sd = delays.sd();
  }
  const std::size_t alarms = s.false_alarms + s.true_alarms;
  if (alarms > 0) {
    s.far_hat = static_cast<double>(s.false_alarms) / static_cast<double>(alarms);
  }
  s.arl1_lower_bound = s.truncated > 0;
  RunningMoments limit_moments;
  for (const double l : limits) {
    if (std::isfinite(l)) {
      limit_moments.push(l);
    }
  }
  if (limit_moments.count() > 0) {
    s.mean_limit = limit_moments.mean();
  }
  return s;
}

namespace {

constexpr double kNoLimit = std::numeric_limits<double>::quiet_NaN();

std::optional<double> shift_of(const ProcessSpec& spec) {
  return std::visit(
      [](const auto& kind) -> std::optional<double> {
        using K = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<K, Sine> || std::is_same_v<K, Monomial>) {
          return std::nullopt;
        } else {
          return kind.xi;
        }
      },
      spec.kind);
}

std::vector<ProfileSample> draw_historical(const ExperimentConfig& config, RngStream rng) {
  ProcessSampler sampler(config.scenario.in_control, config.grid);
  std::vector<ProfileSample> out(config.m);
  for (std::size_t i = 0; i < config.m; ++i) {
    out[i].values.resize(static_cast<Eigen::Index>(sampler.dim()));
    sampler.draw(rng, out[i].values);
    out[i].time_index = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(config.m) + 1;
  }
  return out;
}

/// In control through the changepoint, out of control afterwards.
class ScenarioStream {
 public:
  ScenarioStream(const ExperimentConfig& config, RngStream rng)
      : in_control_(config.scenario.in_control, config.grid),
        out_of_control_(config.scenario.out_of_control, config.grid),
        changepoint_(config.changepoint),
        rng_(std::move(rng)) {}

  ProfileSample operator()(std::int64_t t) {
    ProfileSample y{Eigen::VectorXd(static_cast<Eigen::Index>(in_control_.dim())), t};
    (t <= changepoint_ ? in_control_ : out_of_control_).draw(rng_, y.values);
    return y;
  }

 private:
  ProcessSampler in_control_;
  ProcessSampler out_of_control_;
  std::int64_t changepoint_;
  RngStream rng_;
};

/// Alarm tests for every rule of one calibrated conditional p-value chart.
/// Both aggregates are computed once per profile.
std::vector<AlarmTest> proposed_alarms(const BootstrapCalibration& calibration,
                                       const std::vector<AggregationRule>& rules) {
  struct Shared {
    ConditionalScorer scorer;
    std::int64_t time = std::numeric_limits<std::int64_t>::min();
    ConditionalScorer::Scores scores{1.0, 1.0};
  };
  auto shared = std::make_shared<Shared>(Shared{ConditionalScorer(calibration.monitor_model)});
  std::vector<AlarmTest> out;
  for (const auto rule : rules) {
    const double limit = calibration.chart(rule).limit;
    out.emplace_back([shared, rule, limit](const ProfileSample& y) {
      if (shared->time != y.time_index) {
        shared->scores = shared->scorer.score(y.values);
        shared->time = y.time_index;
      }
      return shared->scores.get(rule) < limit;
    });
  }
  return out;
}

enum Purpose : std::uint64_t { kHistorical = 0, kBootstrap = 1, kOnline = 2, kT2 = 3, kPca = 4 };

struct ChartRuns {
  std::vector<std::optional<RunLengthRecord>> records;
  std::vector<double> limits;
};

}  // namespace

ScenarioReport run_scenario(const ExperimentConfig& config, std::size_t workers) {
  config.validate();
  const BootstrapPlan plan = config.effective_plan();
  const RngStream base(config.seed);
  const bool proposed =
      std::find(config.charts.begin(), config.charts.end(), ChartKind::Proposed) !=
      config.charts.end();

  ScenarioReport report;
  report.mode = "simulate";
  report.config = config;
  report.xi = shift_of(config.scenario.out_of_control);

  // Pass 1: conditional p-value charts, one slot per rule.
  std::vector<ChartRuns> rule_runs(config.rules.size());
  for (auto& r : rule_runs) {
    r.records.resize(config.reps);
    r.limits.assign(config.reps, kNoLimit);
  }
  if (proposed) {
    parallel_for(config.reps, workers, [&](std::size_t rep) {
      const RngStream stream = base.child(rep);
      const auto historical = draw_historical(config, stream.child(kHistorical));
      std::optional<BootstrapCalibration> calibration;
      try {
        RngStream boot = stream.child(kBootstrap);
        calibration = bootstrap_calibrate(historical, plan, config.rules, boot);
      } catch (const Error&) {
        return;
      }
      const auto alarms = proposed_alarms(*calibration, config.rules);
      const auto records = run_monitors(alarms, ScenarioStream(config, stream.child(kOnline)),
                                        config.cap, config.changepoint, AlarmMode::MultiAlarm);
      for (std::size_t r = 0; r < config.rules.size(); ++r) {
        rule_runs[r].records[rep] = records[r];
        rule_runs[r].limits[rep] = calibration->chart(config.rules[r]).limit;
      }
    });
    for (std::size_t r = 0; r < config.rules.size(); ++r) {
      report.charts.push_back(summarize(ChartKind::Proposed, config.rules[r],
                                        rule_runs[r].records, rule_runs[r].limits));
    }
  }

  // Pass 2: competitors, matched to the false-alarm rate observed above and
  // monitored on the same historical data and online stream.
  std::vector<ChartKind> competitors;
  for (const auto k : config.charts) {
    if (k != ChartKind::Proposed) {
      competitors.push_back(k);
    }
  }
  if (competitors.empty()) {
    return report;
  }
  double alarm_prob = 1.0 / static_cast<double>(config.arl0);
  if (proposed && config.changepoint > 0) {
    const auto it = std::find(config.rules.begin(), config.rules.end(), config.far_reference_rule);
    if (it != config.rules.end()) {
      const auto& ref = report.charts[static_cast<std::size_t>(it - config.rules.begin())];
      if (ref.far_hat && *ref.far_hat > 0.0 && *ref.far_hat < 1.0) {
        alarm_prob = alarm_prob_for_far(*ref.far_hat, config.changepoint);
      }
    }
  }

  std::vector<ChartRuns> comp_runs(competitors.size());
  for (auto& r : comp_runs) {
    r.records.resize(config.reps);
    r.limits.assign(config.reps, kNoLimit);
  }
  parallel_for(config.reps, workers, [&](std::size_t rep) {
    const RngStream stream = base.child(rep);
    const auto historical = draw_historical(config, stream.child(kHistorical));
    std::vector<AlarmTest> alarms;
    std::vector<std::size_t> slots;
    for (std::size_t c = 0; c < competitors.size(); ++c) {
      try {
        if (competitors[c] == ChartKind::HotellingT2) {
          auto chart = std::make_shared<T2Chart>(T2Chart{estimate_moments(historical), 0.0});
          RngStream cal = stream.child(kT2);
          chart->limit = calibrate_to_far(
              [&](const Eigen::Ref<const Eigen::VectorXd>& y) { return chart->statistic(y); },
              config.scenario.in_control, config.grid, alarm_prob, config.competitor_draws, cal);
          comp_runs[c].limits[rep] = chart->limit;
          alarms.emplace_back([chart](const ProfileSample& y) { return chart->alarm(y.values); });
        } else {
          auto chart =
              std::make_shared<PcaChart>(pca_chart_fit(historical, config.pca_variance_fraction));
          RngStream cal = stream.child(kPca);
          chart->limit = calibrate_to_far(
              [&](const Eigen::Ref<const Eigen::VectorXd>& y) { return chart->statistic(y); },
              config.scenario.in_control, config.grid, alarm_prob, config.competitor_draws, cal);
          comp_runs[c].limits[rep] = chart->limit;
          alarms.emplace_back([chart](const ProfileSample& y) { return chart->alarm(y.values); });
        }
        slots.push_back(c);
      } catch (const Error&) {
      }
    }
    if (alarms.empty()) {
      return;
    }
    const auto records = run_monitors(alarms, ScenarioStream(config, stream.child(kOnline)),
                                      config.cap, config.changepoint, AlarmMode::MultiAlarm);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      comp_runs[slots[i]].records[rep] = records[i];
    }
  });
  for (std::size_t c = 0; c < competitors.size(); ++c) {
    auto summary = summarize(competitors[c], std::nullopt, comp_runs[c].records,
                             comp_runs[c].limits);
    summary.target_alarm_prob = alarm_prob;
    report.charts.push_back(std::move(summary));
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<GeometricLimitReport> runlength_verify(
    const std::vector<ReferenceDistribution>& distributions,
    const std::vector<std::size_t>& m_values, std::size_t arl0, std::size_t reps,
    std::uint64_t seed, std::size_t workers) {
  const RngStream base(seed);
  std::vector<GeometricLimitReport> rows;
  for (const auto d : distributions) {
    for (const auto m : m_values) {
      const RngStream stream = base.child(static_cast<std::uint64_t>(d)).child(m);
      rows.push_back(geometric_limit_check(m, arl0, reps, d, stream, workers));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

/// Cycles through fresh random permutations of a pool of profiles.
class PermutedPool {
 public:
  PermutedPool(const std::vector<ProfileSample>& pool, RngStream& rng)
      : pool_(&pool), order_(pool.size()), next_(pool.size()), rng_(&rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  const ProfileSample& next() {
    if (next_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), *rng_);
      next_ = 0;
    }
    return (*pool_)[order_[next_++]];
  }

 private:
  const std::vector<ProfileSample>* pool_;
  std::vector<std::size_t> order_;
  std::size_t next_;
  RngStream* rng_;
};

}  // namespace

ScenarioReport monitor_profiles(const std::vector<ProfileSample>& historical,
                                const std::vector<ProfileSample>& online,
                                const MonitorCsvConfig& config, std::size_t workers) {
  if (historical.empty() || online.empty()) {
    throw Error(ErrorCode::EmptyInput, "monitor_csv: historical and online pools must be non-empty");
  }
  const std::size_t n = historical.front().size();
  for (const auto* pool : {&historical, &online}) {
    for (const auto& y : *pool) {
      if (y.size() != n) {
        throw Error(ErrorCode::DimensionMismatch,
                    "monitor_csv: all profiles must have " + std::to_string(n) + " sites");
      }
    }
  }
  if (config.reps < 1 || config.cap < 1 || config.changepoint < 0 ||
      config.cap <= config.changepoint) {
    throw Error(ErrorCode::InvalidArgument, "monitor_csv: need reps >= 1, cap > changepoint >= 0");
  }

  BootstrapPlan plan = config.plan;
  plan.arl0 = config.arl0;
  if (plan.m_star == 0) {
    plan.m_star = historical.size() / 2;
  }
  const RngStream base(config.seed);
  RngStream calibration_rng = base.child(0);
  const auto calibration = bootstrap_calibrate(historical, plan, config.rules, calibration_rng,
                                                 workers);

  std::vector<ChartRuns> runs(config.rules.size());
  for (auto& r : runs) {
    r.records.resize(config.reps);
  }
  parallel_for(config.reps, workers, [&](std::size_t rep) {
    RngStream rng = base.child(1).child(rep);
    PermutedPool in_control(historical, rng);
    PermutedPool out_of_control(online, rng);
    const ProfileSource source = [&](std::int64_t t) {
      ProfileSample y = (t <= config.changepoint ? in_control : out_of_control).next();
      y.time_index = t;
      return y;
    };
    const auto records = run_monitors(proposed_alarms(calibration, config.rules), source,
                                      config.cap, config.changepoint, AlarmMode::MultiAlarm);
    for (std::size_t r = 0; r < config.rules.size(); ++r) {
      runs[r].records[rep] = records[r];
    }
  });

  ScenarioReport report;
  report.mode = "monitor-csv";
  report.config.m = historical.size();
  report.config.arl0 = config.arl0;
  report.config.plan = plan;
  report.config.rules = config.rules;
  report.config.reps = config.reps;
  report.config.cap = config.cap;
  report.config.changepoint = config.changepoint;
  report.config.seed = config.seed;
  report.config.charts = {ChartKind::Proposed};
  report.csv = CsvSource{"", "", historical.size(), online.size(), n};
  for (std::size_t r = 0; r < config.rules.size(); ++r) {
    const double limit = calibration.chart(config.rules[r]).limit;
    report.charts.push_back(summarize(ChartKind::Proposed, config.rules[r], runs[r].records,
                                      std::vector<double>(1, limit)));
  }
  return report;
}

ScenarioReport monitor_csv(const std::filesystem::path& historical_path,
                           const std::filesystem::path& online_path,
                           const MonitorCsvConfig& config, std::size_t workers) {
  const auto historical = read_profiles_csv(historical_path);
  const auto online = read_profiles_csv(online_path);
  ScenarioReport report = monitor_profiles(historical, online, config, workers);
  report.csv->historical_path = historical_path.string();
  report.csv->online_path = online_path.string();
  return report;
}

}  // namespace profmon
