#include <doctest.h>

#include <string>

#include "profmon/error.hpp"
#include "profmon/harness.hpp"

using namespace profmon;

namespace {

ScenarioReport sample_report() {
  ScenarioReport r;
  r.mode = "simulate";
  r.config = ExperimentConfig::for_study(3, 0.7);
  r.config.seed = 0xdeadbeefcafe1234ull;
  r.config.charts = {ChartKind::Proposed, ChartKind::HotellingT2, ChartKind::Pca};
  r.xi = 0.7;
  ChartSummary a;
  a.chart = ChartKind::Proposed;
  a.rule = AggregationRule::Minimum;
  a.replications = 200;
  a.true_alarms = 199;
  a.false_alarms = 31;
  a.truncated = 1;
  a.arl1_hat = 3.0 / 7.0;
  a.arl1_se = 0.1 + 0.2;
  a.arl1_sd = 1e-300;
  a.far_hat = 31.0 / 230.0;
  a.arl1_lower_bound = true;
  a.mean_limit = 0.0123456789012345678;
  ChartSummary b;
  b.chart = ChartKind::HotellingT2;
  b.calibration_failures = 200;
  b.target_alarm_prob = 1.0 / 3.0;
  r.charts = {a, b};
  return r;
}

}  // namespace

TEST_CASE("json report round trip") {
  const auto r = sample_report();
  const auto text = emit_report(r, ReportFormat::Json);
  CHECK(parse_report(text) == r);
  CHECK(text.find("\"seed\": 16045690984503054900") != std::string::npos);
  CHECK(emit_report(parse_report(text), ReportFormat::Json) == text);
}

TEST_CASE("json report list round trip") {
  auto r1 = sample_report();
  auto r2 = sample_report();
  r2.mode = "monitor-csv";
  r2.xi.reset();
  r2.csv = CsvSource{"a.csv", "b.csv", 10, 20, 3};
  const auto text = emit_reports({r1, r2}, ReportFormat::Json);
  const auto back = parse_reports(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r1);
  CHECK(back[1] == r2);
}

TEST_CASE("json field order is stable") {
  const auto text = emit_report(sample_report(), ReportFormat::Json);
  CHECK(text.find("\"mode\"") < text.find("\"config\""));
  CHECK(text.find("\"config\"") < text.find("\"charts\""));
  CHECK(text.find("\"arl1_hat\"") < text.find("\"far_hat\""));
}

TEST_CASE("csv report has one row per chart and rule") {
  const auto text = emit_report(sample_report(), ReportFormat::Csv);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.rfind("mode,seed,xi,chart,rule,", 0) == 0);
  CHECK(text.find("simulate,16045690984503054900,0.69999999999999996,proposed,minimum,200") !=
        std::string::npos);
  CHECK(text.find(",hotelling_t2,,") != std::string::npos);
  const auto two = emit_reports({sample_report(), sample_report()}, ReportFormat::Csv);
  CHECK(std::count(two.begin(), two.end(), '\n') == 5);
}

TEST_CASE("config parse fills defaults and honours study presets") {
  const auto c = parse_config(R"({"study": 2, "xi": 0.4, "reps": 17, "rules": ["minimum"],
                                  "plan": {"b2": 10}, "grid": {"n": 12, "lower": 0.1, "upper": 3.0}})");
  CHECK(c.scenario.out_of_control == study_out_of_control(2, 0.4));
  CHECK(c.reps == 17);
  CHECK(c.rules == std::vector<AggregationRule>{AggregationRule::Minimum});
  CHECK(c.plan.b2 == 10);
  CHECK(c.plan.b1 == 100);
  CHECK(c.grid.size() == 12);
  CHECK(c.arl0 == 200);
}

TEST_CASE("config round trip") {
  auto c = ExperimentConfig::for_study(1, 0.3);
  c.seed = 99;
  c.charts = {ChartKind::Pca};
  c.far_reference_rule = AggregationRule::Minimum;
  CHECK(parse_config(emit_config(c)) == c);
  for (int s : {2, 3}) {
    const auto d = ExperimentConfig::for_study(s, 0.9);
    CHECK(parse_config(emit_config(d)) == d);
  }
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("{not json"), Error);
  CHECK_THROWS_AS(parse_config(R"({"rules": ["median"]})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"scenario": {"in_control": {"kind": "spline"}}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"reps": 0})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"reps": "many"})"), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("format and chart names") {
  CHECK(parse_format("json") == ReportFormat::Json);
  CHECK(parse_format("csv") == ReportFormat::Csv);
  CHECK_THROWS_AS(parse_format("toml"), Error);
  for (auto k : {ChartKind::Proposed, ChartKind::HotellingT2, ChartKind::Pca}) {
    CHECK(parse_chart(to_string(k)) == k);
  }
}
