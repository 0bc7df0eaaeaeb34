#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "profmon/csv.hpp"
#include "profmon/error.hpp"
#include "profmon/harness.hpp"
#include "profmon/stats.hpp"

using namespace profmon;

namespace {

ExperimentConfig small_config(int study, double xi) {
  auto c = ExperimentConfig::for_study(study, xi);
  c.m = 200;
  c.arl0 = 20;
  c.plan.b1 = 10;
  c.plan.b2 = 5;
  c.reps = 12;
  c.cap = 400;
  c.changepoint = 20;
  c.competitor_draws = 5000;
  c.charts = {ChartKind::Proposed, ChartKind::HotellingT2, ChartKind::Pca};
  return c;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

std::vector<ProfileSample> draw_pool(const ProcessSpec& spec, std::size_t count,
                                     std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<ProfileSample> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(draw_profile(spec, study_grid(1), rng));
  return out;
}

}  // namespace

TEST_CASE("config presets") {
  const auto c = ExperimentConfig::for_study(2, 0.3);
  CHECK(c.scenario.out_of_control == study_out_of_control(2, 0.3));
  CHECK(c.grid == study_grid(2));
  CHECK(c.reps == 200);
  CHECK(c.arl0 == 200);
  CHECK(c.cap == 5000);
  auto p = c;
  p.paper_scale();
  CHECK(p.reps == 1000);
  CHECK(p.arl0 == 1000);
  CHECK(p.cap == 25000);
  CHECK(p.plan.b2 == 20);
  CHECK(c.effective_plan().m_star == 500);
  CHECK(c.effective_plan().arl0 == 200);
  auto bad = c;
  bad.cap = bad.changepoint;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  bad = c;
  bad.reps = 0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("summaries follow the estimator definitions") {
  std::vector<std::optional<RunLengthRecord>> recs;
  recs.push_back(RunLengthRecord{15, {3, 8}, false, 10});
  recs.push_back(RunLengthRecord{11, {}, false, 10});
  recs.push_back(RunLengthRecord{std::nullopt, {4}, true, 10});
  recs.push_back(std::nullopt);
  const auto s = summarize(ChartKind::Proposed, AggregationRule::Minimum, recs, {0.1, 0.2, NAN});
  CHECK(s.replications == 3);
  CHECK(s.calibration_failures == 1);
  CHECK(s.true_alarms == 2);
  CHECK(s.false_alarms == 3);
  CHECK(s.truncated == 1);
  CHECK(s.arl1_lower_bound);
  CHECK(*s.arl1_hat == doctest::Approx(3.0));
  CHECK(*s.arl1_sd == doctest::Approx(std::sqrt(8.0)));
  CHECK(*s.far_hat == doctest::Approx(3.0 / 5.0));
  CHECK(*s.mean_limit == doctest::Approx(0.15));
}

TEST_CASE("scenario reports are reproducible across worker counts") {
  const auto c = small_config(1, 0.2);
  const auto a = run_scenario(c, 1);
  const auto b = run_scenario(c, 3);
  CHECK(a == b);
  CHECK(emit_report(a, ReportFormat::Json) == emit_report(b, ReportFormat::Json));
  REQUIRE(a.charts.size() == 4);
  CHECK(a.xi == 0.2);
  for (const auto& s : a.charts) {
    CHECK(s.replications + s.calibration_failures == c.reps);
    CHECK(s.true_alarms + s.truncated == s.replications);
  }
  CHECK(a.find(ChartKind::HotellingT2).target_alarm_prob.has_value());
  CHECK(!a.find(ChartKind::Proposed, AggregationRule::Minimum).target_alarm_prob);
}

TEST_CASE("unit cap ends every replication at the first step") {
  auto c = small_config(1, 0.5);
  c.changepoint = 0;
  c.cap = 1;
  const auto r = run_scenario(c, 1);
  for (const auto& s : r.charts) {
    CHECK(s.true_alarms + s.truncated == s.replications);
    if (s.arl1_hat) CHECK(*s.arl1_hat == 1.0);
  }
}

TEST_CASE("null scenario with no changepoint runs at the target ARL") {
  auto c = small_config(1, 0.0);
  c.changepoint = 0;
  c.reps = 150;
  c.cap = 4000;
  c.charts = {ChartKind::Proposed};
  const auto r = run_scenario(c, 2);
  for (const auto rule : c.rules) {
    const auto& s = r.find(ChartKind::Proposed, rule);
    REQUIRE(s.arl1_hat);
    CHECK(s.truncated == 0);
    CHECK(std::abs(*s.arl1_hat - static_cast<double>(c.arl0)) < 3.0 * *s.arl1_se + 0.15 * c.arl0);
  }
}

TEST_CASE("large shift is detected at once") {
  auto c = small_config(1, 1.0);
  c.charts = {ChartKind::Proposed};
  const auto r = run_scenario(c, 1);
  CHECK(*r.find(ChartKind::Proposed, AggregationRule::GeometricMean).arl1_hat < 10.0);
}

TEST_CASE("run-length table") {
  const auto rows = runlength_verify({ReferenceDistribution::Normal, ReferenceDistribution::Cauchy},
                                     {200, 400}, 200, 1, 7);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].m == 400);
  CHECK(std::isnan(rows[0].arl_se));
  const auto csv = runlength_csv(rows);
  CHECK(csv.rfind("distribution,m,k,arl0,reps,sample_arl,arl_se", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(code_of([] { runlength_verify({ReferenceDistribution::Normal}, {300}, 200, 5, 1); }) ==
        ErrorCode::NonIntegerOrder);
}

TEST_CASE("profile csv round trip and diagnostics") {
  const auto pool = draw_pool(study_in_control(1), 5, 3);
  std::stringstream buf;
  write_profiles_csv(buf, pool);
  const auto back = read_profiles_csv(buf);
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back[i].values == pool[i].values);
    CHECK(back[i].time_index == static_cast<std::int64_t>(i + 1));
  }
  std::stringstream no_header("1,2\n3,4\n");
  CHECK(read_profiles_csv(no_header).size() == 2);
  std::stringstream bad("a,b\n1,2\n3,x\n");
  try {
    read_profiles_csv(bad);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
  std::stringstream ragged("1,2\n3,4,5\n");
  CHECK(code_of([&] { read_profiles_csv(ragged); }) == ErrorCode::DimensionMismatch);
  std::stringstream empty("x1,x2\n");
  CHECK(code_of([&] { read_profiles_csv(empty); }) == ErrorCode::EmptyInput);
}

TEST_CASE("permutation monitoring of an in-control pool") {
  const auto hist = draw_pool(study_in_control(1), 1000, 1);
  MonitorCsvConfig cfg;
  cfg.arl0 = 50;
  cfg.plan.b1 = 20;
  cfg.plan.b2 = 5;
  cfg.reps = 300;
  cfg.cap = 5000;
  const auto r = monitor_profiles(hist, hist, cfg, 2);
  CHECK(r.mode == "monitor-csv");
  REQUIRE(r.csv);
  CHECK(r.csv->historical_count == 1000);
  CHECK(r.csv->sites == 10);
  for (const auto rule : cfg.rules) {
    const auto& s = r.find(ChartKind::Proposed, rule);
    REQUIRE(s.arl1_hat);
    CHECK(std::abs(*s.arl1_hat - 50.0) < 3.0 * *s.arl1_se + 10.0);
  }
}

TEST_CASE("permutation monitoring of an overwhelming shift") {
  const auto hist = draw_pool(study_in_control(1), 600, 2);
  auto online = draw_pool(study_in_control(1), 200, 3);
  for (auto& y : online) y.values.array() += 6.0;
  MonitorCsvConfig cfg;
  cfg.arl0 = 50;
  cfg.plan.b1 = 10;
  cfg.reps = 50;
  const auto r = monitor_profiles(hist, online, cfg, 1);
  for (const auto rule : cfg.rules) {
    CHECK(*r.find(ChartKind::Proposed, rule).arl1_hat <= 2.0);
  }
  CHECK(code_of([&] { monitor_profiles(hist, {}, cfg, 1); }) == ErrorCode::EmptyInput);
  std::vector<ProfileSample> narrow{ProfileSample{Eigen::Vector2d(1, 2), 0}};
  CHECK(code_of([&] { monitor_profiles(hist, narrow, cfg, 1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("monitor csv reads files") {
  const auto dir = std::filesystem::temp_directory_path() / "profmon_test_csv";
  std::filesystem::create_directories(dir);
  const auto hist = draw_pool(study_in_control(1), 300, 5);
  write_profiles_csv(dir / "hist.csv", hist);
  { std::ofstream(dir / "empty.csv") << "x1,x2,x3,x4,x5,x6,x7,x8,x9,x10\n"; }
  MonitorCsvConfig cfg;
  cfg.arl0 = 20;
  cfg.plan.b1 = 5;
  cfg.reps = 5;
  const auto r = monitor_csv(dir / "hist.csv", dir / "hist.csv", cfg);
  CHECK(r.csv->historical_path == (dir / "hist.csv").string());
  CHECK(code_of([&] { monitor_csv(dir / "hist.csv", dir / "empty.csv", cfg); }) ==
        ErrorCode::EmptyInput);
  CHECK(code_of([&] { monitor_csv(dir / "hist.csv", dir / "missing.csv", cfg); }) ==
        ErrorCode::Io);
  std::filesystem::remove_all(dir);
}
