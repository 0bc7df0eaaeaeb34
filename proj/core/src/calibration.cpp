#include "profmon/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "profmon/error.hpp"
#include "profmon/parallel.hpp"

namespace profmon {

std::size_t order_index_for(std::size_t m, std::size_t arl0) {
  if (arl0 == 0 || m == 0) {
    throw Error(ErrorCode::InvalidArgument, "order index: m and arl0 must be positive");
  }
  if (m % arl0 != 0) {
    throw Error(ErrorCode::NonIntegerOrder,
                "order index: m / arl0 = " + std::to_string(m) + " / " + std::to_string(arl0) +
                    " is not an integer");
  }
  const std::size_t k = 1 + m / arl0;
  if (k < 2 || k >= m) {
    throw Error(ErrorCode::InvalidArgument,
                "order index: need 2 <= k < m, got k = " + std::to_string(k) +
                    " for m = " + std::to_string(m));
  }
  return k;
}

OrderStatChart order_stat_limit(std::vector<double> stats, std::size_t arl0) {
  const std::size_t k = order_index_for(stats.size(), arl0);
  // Ties are pushed apart by one ulp so the reference is strictly increasing.
  std::sort(stats.begin(), stats.end());
  for (std::size_t i = 1; i < stats.size(); ++i) {
    if (!(stats[i] > stats[i - 1])) {
      stats[i] = std::nextafter(stats[i - 1], std::numeric_limits<double>::infinity());
    }
  }
  OrderStatChart chart;
  chart.k = k;
  chart.limit = stats[k - 1];
  chart.reference = std::move(stats);
  return chart;
}

double kth_smallest(std::span<double> values, std::size_t k) {
  if (k < 1 || k > values.size()) {
    throw Error(ErrorCode::InvalidArgument, "kth_smallest: k out of range");
  }
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

// ---------------------------------------------------------------------------

namespace {

void check_mk(std::size_t m, std::size_t k, const char* where) {
  if (k < 1 || k > m) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(where) + ": need 1 <= k <= m (m = " + std::to_string(m) +
                    ", k = " + std::to_string(k) + ")");
  }
}

// log C(m,k) - log C(T+m,k) = -sum_{i<k} log1p(T / (m - i)). Stays exact in
// relative terms for T far beyond where factorials (or lgamma differences of
// large arguments) lose precision.
double log_binomial_ratio(std::size_t m, std::size_t k, std::uint64_t T) {
  const double t = static_cast<double>(T);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc -= std::log1p(t / static_cast<double>(m - i));
  }
  return acc;
}

// C(m,k) / C(T+m,k) = prod_{i<k} (m-i)/(T+m-i). The direct product carries
// about k ulp of relative error against |log S| ulp for exp of the log sum,
// which matters when S is differenced; the log route takes over near underflow.
double binomial_ratio(std::size_t m, std::size_t k, std::uint64_t T) {
  constexpr double kUnderflowGuard = 1e-280;
  const double t = static_cast<double>(T);
  double acc = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double num = static_cast<double>(m - i);
    acc *= num / (num + t);
    if (acc < kUnderflowGuard) {
      return std::exp(log_binomial_ratio(m, k, T));
    }
  }
  return acc;
}

}  // namespace

double arl0_exact(std::size_t m, std::size_t k) {
  if (k == 1) {
    throw Error(ErrorCode::InfiniteArl, "arl0_exact: k = 1 gives an infinite in-control ARL");
  }
  if (k < 1 || k >= m) {
    throw Error(ErrorCode::InvalidArgument, "arl0_exact: need 2 <= k < m");
  }
  return static_cast<double>(m) / static_cast<double>(k - 1);
}

double no_alarm_prob(std::size_t m, std::size_t k, std::uint64_t T) {
  check_mk(m, k, "no_alarm_prob");
  if (T == 0) {
    return 1.0;
  }
  return binomial_ratio(m, k, T);
}

double first_alarm_pmf(std::size_t m, std::size_t k, std::uint64_t T) {
  check_mk(m, k, "first_alarm_pmf");
  if (T == 0) {
    return 0.0;
  }
  // Pr(no alarm through T-1) * Pr(V_T < U_(k) | that) = S(T-1) k / (T + m)
  return binomial_ratio(m, k, T - 1) * static_cast<double>(k) /
         (static_cast<double>(T) + static_cast<double>(m));
}

double arl0_series(std::size_t m, std::size_t k, std::uint64_t trunc) {
  check_mk(m, k, "arl0_series");
  if (trunc < 1) {
    throw Error(ErrorCode::InvalidArgument, "arl0_series: trunc must be >= 1");
  }
  const double md = static_cast<double>(m);
  const double kd = static_cast<double>(k);
  // pmf(t+1) = pmf(t) (t + m - k) / (t + m + 1)
  double pmf = kd / (md + 1.0);
  double sum = 0.0;
  double compensation = 0.0;
  for (std::uint64_t t = 1; t <= trunc; ++t) {
    const double td = static_cast<double>(t);
    const double term = td * pmf;
    const double next = sum + term;
    compensation += std::fabs(sum) >= std::fabs(term) ? (sum - next) + term : (term - next) + sum;
    sum = next;
    pmf *= (td + md - kd) / (td + md + 1.0);
  }
  return sum + compensation;
}

double run_length_variance(std::size_t m, std::size_t k) {
  if (k < 2 || k >= m) {
    throw Error(ErrorCode::InvalidArgument, "run_length_variance: need 2 <= k < m");
  }
  if (k == 2) {
    return std::numeric_limits<double>::infinity();
  }
  const double md = static_cast<double>(m);
  const double kd = static_cast<double>(k);
  return md * kd * (md - kd + 1.0) / ((kd - 1.0) * (kd - 1.0) * (kd - 2.0));
}

double geometric_variance(double arl0) noexcept { return arl0 * (arl0 - 1.0); }

// ---------------------------------------------------------------------------

std::string_view to_string(ReferenceDistribution d) noexcept {
  switch (d) {
    case ReferenceDistribution::Uniform: return "uniform";
    case ReferenceDistribution::Normal: return "normal";
    case ReferenceDistribution::StudentT2: return "t2";
    case ReferenceDistribution::Cauchy: return "cauchy";
    case ReferenceDistribution::ChiSquare2: return "chisq2";
    case ReferenceDistribution::Beta1_10: return "beta1_10";
  }
  return "unknown";
}

ReferenceDistribution parse_distribution(std::string_view name) {
  for (auto d : {ReferenceDistribution::Uniform, ReferenceDistribution::Normal,
                 ReferenceDistribution::StudentT2, ReferenceDistribution::Cauchy,
                 ReferenceDistribution::ChiSquare2, ReferenceDistribution::Beta1_10}) {
    if (name == to_string(d)) {
      return d;
    }
  }
  throw Error(ErrorCode::Parse, "unknown distribution '" + std::string(name) + "'");
}

double draw(ReferenceDistribution d, RngStream& rng) {
  switch (d) {
    case ReferenceDistribution::Uniform:
      return rng.uniform();
    case ReferenceDistribution::Normal:
      return rng.normal();
    case ReferenceDistribution::StudentT2:
      return std::student_t_distribution<double>(2.0)(rng);
    case ReferenceDistribution::Cauchy:
      return std::cauchy_distribution<double>(0.0, 1.0)(rng);
    case ReferenceDistribution::ChiSquare2:
      return std::chi_squared_distribution<double>(2.0)(rng);
    case ReferenceDistribution::Beta1_10:
      // F(x) = 1 - (1 - x)^10 on [0, 1]
      return -std::expm1(0.1 * std::log(rng.uniform()));
  }
  return 0.0;
}

std::int64_t simulate_run_length(std::size_t m, std::size_t k, ReferenceDistribution d,
                                 RngStream& rng, std::vector<double>& workspace) {
  workspace.resize(m);
  for (auto& u : workspace) {
    u = draw(d, rng);
  }
  const double limit = kth_smallest(workspace, k);
  for (std::int64_t t = 1;; ++t) {
    if (draw(d, rng) < limit) {
      return t;
    }
  }
}

GeometricLimitReport geometric_limit_check(std::size_t m, std::size_t arl0, std::size_t reps,
                                           ReferenceDistribution d, const RngStream& rng,
                                           std::size_t workers) {
  if (reps == 0) {
    throw Error(ErrorCode::InvalidArgument, "geometric_limit_check: reps must be >= 1");
  }
  GeometricLimitReport report;
  report.m = m;
  report.k = order_index_for(m, arl0);
  report.arl0 = arl0;
  report.reps = reps;
  report.distribution = d;

  std::vector<std::int64_t> lengths(reps);
  const std::size_t chunks = std::max<std::size_t>(1, std::min(reps, workers * 8));
  parallel_for(chunks, workers, [&](std::size_t c) {
    std::vector<double> workspace;
    for (std::size_t r = c; r < reps; r += chunks) {
      RngStream stream = rng.child(r);
      lengths[r] = simulate_run_length(m, report.k, d, stream, workspace);
    }
  });

  RunningMoments moments;
  for (const auto w : lengths) {
    moments.push(static_cast<double>(w));
  }
  report.sample_arl = moments.mean();
  report.arl_se = moments.standard_error();
  report.sample_sd = moments.sd();
  report.geometric_sd = std::sqrt(geometric_variance(static_cast<double>(arl0)));
  report.exact_sd = std::sqrt(run_length_variance(m, report.k));

  // Equiprobable bins under Geometric(p): edges at ceil(log(1 - i/B) / log(1 - p)).
  const std::size_t bins = std::min<std::size_t>(20, reps / 5);
  if (bins >= 2) {
    const double p = 1.0 / static_cast<double>(arl0);
    const double log_q = std::log1p(-p);
    std::vector<std::int64_t> edges;  // inclusive upper edge of each bin but the last
    for (std::size_t i = 1; i < bins; ++i) {
      const auto e = static_cast<std::int64_t>(
          std::ceil(std::log1p(-static_cast<double>(i) / static_cast<double>(bins)) / log_q));
      if (edges.empty() || e > edges.back()) {
        edges.push_back(e);
      }
    }
    std::vector<std::int64_t> observed(edges.size() + 1, 0);
    for (const auto w : lengths) {
      const auto it = std::lower_bound(edges.begin(), edges.end(), w);
      ++observed[static_cast<std::size_t>(it - edges.begin())];
    }
    std::vector<double> expected(observed.size());
    double prev_cdf = 0.0;
    for (std::size_t b = 0; b < observed.size(); ++b) {
      const double cdf =
          b < edges.size() ? -std::expm1(static_cast<double>(edges[b]) * log_q) : 1.0;
      expected[b] = static_cast<double>(reps) * (cdf - prev_cdf);
      prev_cdf = cdf;
    }
    report.bins = observed.size();
    report.chi_square = chi_square_gof(observed, expected);
  }
  return report;
}

// ---------------------------------------------------------------------------

const OrderStatChart& BootstrapCalibration::chart(AggregationRule rule) const {
  for (const auto& rc : charts) {
    if (rc.rule == rule) {
      return rc.chart;
    }
  }
  throw Error(ErrorCode::InvalidArgument,
              "bootstrap calibration has no chart for rule " + std::string(to_string(rule)));
}

BootstrapCalibration bootstrap_calibrate(std::span<const ProfileSample> historical,
                                         const BootstrapPlan& plan,
                                         std::span<const AggregationRule> rules, RngStream& rng,
                                         std::size_t workers) {
  if (historical.empty()) {
    throw Error(ErrorCode::InsufficientSamples, "bootstrap_calibrate: no historical profiles");
  }
  if (rules.empty()) {
    throw Error(ErrorCode::InvalidArgument, "bootstrap_calibrate: no aggregation rule given");
  }
  if (plan.b1 == 0 || plan.b2 == 0 || plan.arl0 == 0 || plan.batch == 0) {
    throw Error(ErrorCode::InvalidArgument, "bootstrap_calibrate: b1, b2, arl0 must be >= 1");
  }
  const std::size_t m = historical.size();
  const std::size_t n = historical.front().size();
  const std::size_t m_star = plan.m_star != 0 ? plan.m_star : m / 2;
  if (m_star >= m || m - m_star < n + 1 || m_star < n + 1) {
    throw Error(ErrorCode::InsufficientSamples,
                "bootstrap_calibrate: need m - m_star >= n + 1 and m_star >= n + 1 (m = " +
                    std::to_string(m) + ", m_star = " + std::to_string(m_star) +
                    ", n = " + std::to_string(n) + ")");
  }

  BootstrapCalibration out{estimate_moments(historical.first(m - m_star)),
                           estimate_moments(historical.last(m_star)), m, m_star, {}};

  const std::size_t inner = plan.inner_size != 0 ? plan.inner_size : m;
  const std::size_t per_resample = plan.b2 * plan.arl0;
  const std::size_t m_prime = plan.m_prime();
  std::vector<std::vector<double>> scores(rules.size(), std::vector<double>(m_prime));
  const RngStream base(rng());

  parallel_for(plan.b1, workers, [&](std::size_t j) {
    RngStream stream = base.child(j);
    Eigen::MatrixXd synthetic(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(inner));
    sample_into(out.boot_model, synthetic, stream);
    const GaussianModel refit = estimate_moments(synthetic);

    ConditionalScorer scorer(out.monitor_model);
    Eigen::MatrixXd batch;
    for (std::size_t done = 0; done < per_resample;) {
      const std::size_t size = std::min(plan.batch, per_resample - done);
      batch.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(size));
      sample_into(refit, batch, stream);
      for (std::size_t c = 0; c < size; ++c) {
        const auto s = scorer.score(batch.col(static_cast<Eigen::Index>(c)));
        for (std::size_t r = 0; r < rules.size(); ++r) {
          scores[r][j * per_resample + done + c] = s.get(rules[r]);
        }
      }
      done += size;
    }
  });

  for (std::size_t r = 0; r < rules.size(); ++r) {
    out.charts.push_back(RuleChart{rules[r], order_stat_limit(std::move(scores[r]), plan.arl0)});
  }
  return out;
}

}  // namespace profmon
