#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "profmon/error.hpp"
#include "profmon/harness.hpp"

namespace profmon {

using Json = nlohmann::ordered_json;

namespace {

// Process specs ---------------------------------------------------------------

Json base_to_json(const BaseProcess& base) {
  return std::visit(
      [](const auto& b) -> Json {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, Sine>) {
          return Json{{"kind", "sine"}, {"coef_mean", b.coef_mean}, {"coef_sd", b.coef_sd}};
        } else {
          return Json{{"kind", "monomial"},
                      {"degree", b.degree},
                      {"coef_mean", b.coef_mean},
                      {"coef_sd", b.coef_sd}};
        }
      },
      base);
}

Json kind_to_json(const ProcessKind& kind) {
  return std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Sine> || std::is_same_v<K, Monomial>) {
          return base_to_json(k);
        } else if constexpr (std::is_same_v<K, GlobalShift>) {
          return Json{{"kind", "global_shift"}, {"base", base_to_json(k.base)}, {"xi", k.xi}};
        } else if constexpr (std::is_same_v<K, BrokenMonitor>) {
          return Json{{"kind", "broken_monitor"},
                      {"base", base_to_json(k.base)},
                      {"xi", k.xi},
                      {"site", k.site}};
        } else {
          return Json{{"kind", "trajectory_switch"},
                      {"base", base_to_json(k.base)},
                      {"pivot_site", k.pivot_site},
                      {"xi", k.xi}};
        }
      },
      kind);
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end()) {
    out = it->template get<T>();
  }
}

BaseProcess base_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "sine") {
    Sine s;
    read_opt(j, "coef_mean", s.coef_mean);
    read_opt(j, "coef_sd", s.coef_sd);
    return s;
  }
  if (kind == "monomial") {
    Monomial s;
    read_opt(j, "degree", s.degree);
    read_opt(j, "coef_mean", s.coef_mean);
    read_opt(j, "coef_sd", s.coef_sd);
    return s;
  }
  throw Error(ErrorCode::Parse, "base process must be sine or monomial, got '" + kind + "'");
}

ProcessKind kind_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "sine" || kind == "monomial") {
    return std::visit([](const auto& b) -> ProcessKind { return b; }, base_from_json(j));
  }
  if (kind == "global_shift") {
    GlobalShift s{base_from_json(j.at("base"))};
    read_opt(j, "xi", s.xi);
    return s;
  }
  if (kind == "broken_monitor") {
    BrokenMonitor s{base_from_json(j.at("base"))};
    read_opt(j, "xi", s.xi);
    read_opt(j, "site", s.site);
    return s;
  }
  if (kind == "trajectory_switch") {
    TrajectorySwitch s{base_from_json(j.at("base"))};
    read_opt(j, "pivot_site", s.pivot_site);
    read_opt(j, "xi", s.xi);
    return s;
  }
  throw Error(ErrorCode::Parse, "unknown process kind '" + kind + "'");
}

Json spec_to_json(const ProcessSpec& spec) {
  Json j = kind_to_json(spec.kind);
  j["noise_sd"] = spec.noise_sd;
  return j;
}

ProcessSpec spec_from_json(const Json& j) {
  ProcessSpec spec;
  spec.kind = kind_from_json(j);
  read_opt(j, "noise_sd", spec.noise_sd);
  return spec;
}

// Config ----------------------------------------------------------------------

Json plan_to_json(const BootstrapPlan& p) {
  return Json{{"m_star", p.m_star}, {"b1", p.b1},       {"b2", p.b2},
              {"arl0", p.arl0},     {"inner_size", p.inner_size}, {"batch", p.batch}};
}

BootstrapPlan plan_from_json(const Json& j, BootstrapPlan p) {
  read_opt(j, "m_star", p.m_star);
  read_opt(j, "b1", p.b1);
  read_opt(j, "b2", p.b2);
  read_opt(j, "arl0", p.arl0);
  read_opt(j, "inner_size", p.inner_size);
  read_opt(j, "batch", p.batch);
  return p;
}

Json config_to_json(const ExperimentConfig& c) {
  Json rules = Json::array();
  for (const auto r : c.rules) {
    rules.push_back(to_string(r));
  }
  Json charts = Json::array();
  for (const auto k : c.charts) {
    charts.push_back(to_string(k));
  }
  return Json{
      {"scenario",
       {{"in_control", spec_to_json(c.scenario.in_control)},
        {"out_of_control", spec_to_json(c.scenario.out_of_control)}}},
      {"grid", {{"sites", c.grid.sites}, {"lower", c.grid.lower}, {"upper", c.grid.upper}}},
      {"m", c.m},
      {"arl0", c.arl0},
      {"plan", plan_to_json(c.plan)},
      {"rules", rules},
      {"reps", c.reps},
      {"cap", c.cap},
      {"changepoint", c.changepoint},
      {"seed", c.seed},
      {"charts", charts},
      {"pca_variance_fraction", c.pca_variance_fraction},
      {"competitor_draws", c.competitor_draws},
      {"far_reference_rule", to_string(c.far_reference_rule)},
  };
}

MonitorGrid grid_from_json(const Json& j, MonitorGrid g) {
  if (const auto it = j.find("n"); it != j.end()) {
    double lower = g.lower;
    double upper = g.upper;
    read_opt(j, "lower", lower);
    read_opt(j, "upper", upper);
    return MonitorGrid::equispaced(lower, upper, it->get<std::size_t>());
  }
  read_opt(j, "sites", g.sites);
  read_opt(j, "lower", g.lower);
  read_opt(j, "upper", g.upper);
  return g;
}

/// Missing fields keep their defaults. A "study" key (1, 2 or 3, with optional
/// "xi") seeds scenario and grid before explicit fields are applied.
ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  if (const auto it = j.find("study"); it != j.end()) {
    double xi = 0.0;
    read_opt(j, "xi", xi);
    c = ExperimentConfig::for_study(it->get<int>(), xi);
  }
  if (const auto it = j.find("scenario"); it != j.end()) {
    if (const auto ic = it->find("in_control"); ic != it->end()) {
      c.scenario.in_control = spec_from_json(*ic);
    }
    if (const auto oc = it->find("out_of_control"); oc != it->end()) {
      c.scenario.out_of_control = spec_from_json(*oc);
    }
  }
  if (const auto it = j.find("grid"); it != j.end()) {
    c.grid = grid_from_json(*it, c.grid);
  }
  read_opt(j, "m", c.m);
  read_opt(j, "arl0", c.arl0);
  if (const auto it = j.find("plan"); it != j.end()) {
    c.plan = plan_from_json(*it, c.plan);
  }
  if (const auto it = j.find("rules"); it != j.end()) {
    c.rules.clear();
    for (const auto& r : *it) {
      c.rules.push_back(parse_rule(r.get<std::string>()));
    }
  }
  read_opt(j, "reps", c.reps);
  read_opt(j, "cap", c.cap);
  read_opt(j, "changepoint", c.changepoint);
  read_opt(j, "seed", c.seed);
  if (const auto it = j.find("charts"); it != j.end()) {
    c.charts.clear();
    for (const auto& k : *it) {
      c.charts.push_back(parse_chart(k.get<std::string>()));
    }
  }
  read_opt(j, "pca_variance_fraction", c.pca_variance_fraction);
  read_opt(j, "competitor_draws", c.competitor_draws);
  if (const auto it = j.find("far_reference_rule"); it != j.end()) {
    c.far_reference_rule = parse_rule(it->get<std::string>());
  }
  return c;
}

// Reports ---------------------------------------------------------------------

template <class T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> opt_from(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  return it->template get<T>();
}

Json summary_to_json(const ChartSummary& s) {
  return Json{
      {"chart", to_string(s.chart)},
      {"rule", s.rule ? Json(to_string(*s.rule)) : Json(nullptr)},
      {"replications", s.replications},
      {"true_alarms", s.true_alarms},
      {"false_alarms", s.false_alarms},
      {"truncated", s.truncated},
      {"calibration_failures", s.calibration_failures},
      {"arl1_hat", opt_json(s.arl1_hat)},
      {"arl1_se", opt_json(s.arl1_se)},
      {"arl1_sd", opt_json(s.arl1_sd)},
      {"far_hat", opt_json(s.far_hat)},
      {"arl1_lower_bound", s.arl1_lower_bound},
      {"mean_limit", opt_json(s.mean_limit)},
      {"target_alarm_prob", opt_json(s.target_alarm_prob)},
  };
}

ChartSummary summary_from_json(const Json& j) {
  ChartSummary s;
  s.chart = parse_chart(j.at("chart").get<std::string>());
  if (const auto r = opt_from<std::string>(j, "rule")) {
    s.rule = parse_rule(*r);
  }
  s.replications = j.at("replications").get<std::size_t>();
  s.true_alarms = j.at("true_alarms").get<std::size_t>();
  s.false_alarms = j.at("false_alarms").get<std::size_t>();
  s.truncated = j.at("truncated").get<std::size_t>();
  s.calibration_failures = j.at("calibration_failures").get<std::size_t>();
  s.arl1_hat = opt_from<double>(j, "arl1_hat");
  s.arl1_se = opt_from<double>(j, "arl1_se");
  s.arl1_sd = opt_from<double>(j, "arl1_sd");
  s.far_hat = opt_from<double>(j, "far_hat");
  s.arl1_lower_bound = j.at("arl1_lower_bound").get<bool>();
  s.mean_limit = opt_from<double>(j, "mean_limit");
  s.target_alarm_prob = opt_from<double>(j, "target_alarm_prob");
  return s;
}

Json report_to_json(const ScenarioReport& r) {
  Json charts = Json::array();
  for (const auto& c : r.charts) {
    charts.push_back(summary_to_json(c));
  }
  Json csv = nullptr;
  if (r.csv) {
    csv = Json{{"historical_path", r.csv->historical_path},
               {"online_path", r.csv->online_path},
               {"historical_count", r.csv->historical_count},
               {"online_count", r.csv->online_count},
               {"sites", r.csv->sites}};
  }
  return Json{{"mode", r.mode},
              {"config", config_to_json(r.config)},
              {"csv", csv},
              {"xi", opt_json(r.xi)},
              {"charts", charts}};
}

ScenarioReport report_from_json(const Json& j) {
  ScenarioReport r;
  r.mode = j.at("mode").get<std::string>();
  r.config = config_from_json(j.at("config"));
  if (const auto it = j.find("csv"); it != j.end() && !it->is_null()) {
    r.csv = CsvSource{it->at("historical_path").get<std::string>(),
                      it->at("online_path").get<std::string>(),
                      it->at("historical_count").get<std::size_t>(),
                      it->at("online_count").get<std::size_t>(),
                      it->at("sites").get<std::size_t>()};
  }
  r.xi = opt_from<double>(j, "xi");
  for (const auto& c : j.at("charts")) {
    r.charts.push_back(summary_from_json(c));
  }
  return r;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("json: ") + e.what());
  }
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("json: ") + e.what());
  }
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) {
    return "";
  }
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << *v;
  return out.str();
}

std::string csv_number(double v) { return csv_number(std::optional<double>(v)); }

constexpr const char* kCsvHeader =
    "mode,seed,xi,chart,rule,replications,true_alarms,false_alarms,truncated,"
    "calibration_failures,arl1_hat,arl1_se,arl1_sd,far_hat,arl1_lower_bound,mean_limit,"
    "target_alarm_prob\n";

void csv_rows(std::ostream& out, const ScenarioReport& r) {
  for (const auto& c : r.charts) {
    out << r.mode << ',' << r.config.seed << ',' << csv_number(r.xi) << ',' << to_string(c.chart)
        << ',' << (c.rule ? to_string(*c.rule) : std::string_view{}) << ',' << c.replications
        << ',' << c.true_alarms << ',' << c.false_alarms << ',' << c.truncated << ','
        << c.calibration_failures << ',' << csv_number(c.arl1_hat) << ','
        << csv_number(c.arl1_se) << ',' << csv_number(c.arl1_sd) << ','
        << csv_number(c.far_hat) << ',' << (c.arl1_lower_bound ? 1 : 0) << ','
        << csv_number(c.mean_limit) << ',' << csv_number(c.target_alarm_prob) << '\n';
  }
}

}  // namespace

ReportFormat parse_format(std::string_view name) {
  if (name == "json") {
    return ReportFormat::Json;
  }
  if (name == "csv") {
    return ReportFormat::Csv;
  }
  throw Error(ErrorCode::Parse, "unknown report format '" + std::string(name) + "'");
}

std::string emit_report(const ScenarioReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    return report_to_json(report).dump(2) + "\n";
  }
  std::ostringstream out;
  out << kCsvHeader;
  csv_rows(out, report);
  return out.str();
}

std::string emit_reports(const std::vector<ScenarioReport>& reports, ReportFormat format) {
  if (format == ReportFormat::Json) {
    Json all = Json::array();
    for (const auto& r : reports) {
      all.push_back(report_to_json(r));
    }
    return all.dump(2) + "\n";
  }
  std::ostringstream out;
  out << kCsvHeader;
  for (const auto& r : reports) {
    csv_rows(out, r);
  }
  return out.str();
}

ScenarioReport parse_report(const std::string& json) {
  const Json j = parse_json(json);
  return guarded([&] { return report_from_json(j); });
}

std::vector<ScenarioReport> parse_reports(const std::string& json) {
  const Json j = parse_json(json);
  return guarded([&] {
    std::vector<ScenarioReport> out;
    if (!j.is_array()) {
      out.push_back(report_from_json(j));
      return out;
    }
    for (const auto& r : j) {
      out.push_back(report_from_json(r));
    }
    return out;
  });
}

ExperimentConfig parse_config(const std::string& json) {
  const Json j = parse_json(json);
  auto config = guarded([&] { return config_from_json(j); });
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open config " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string emit_config(const ExperimentConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

std::string runlength_csv(const std::vector<GeometricLimitReport>& rows) {
  std::ostringstream out;
  out << "distribution,m,k,arl0,reps,sample_arl,arl_se,sample_sd,geometric_sd,exact_sd,bins,"
         "chi_square,chi_square_df,chi_square_p\n";
  for (const auto& r : rows) {
    auto num = [](double v) { return std::isfinite(v) ? csv_number(v) : std::string(std::isinf(v) ? "inf" : ""); };
    out << to_string(r.distribution) << ',' << r.m << ',' << r.k << ',' << r.arl0 << ','
        << r.reps << ',' << num(r.sample_arl) << ',' << num(r.arl_se) << ','
        << num(r.sample_sd) << ',' << num(r.geometric_sd) << ',' << num(r.exact_sd) << ','
        << r.bins << ',';
    if (r.bins > 0) {
      out << num(r.chi_square.statistic) << ',' << r.chi_square.degrees_of_freedom << ','
          << num(r.chi_square.p_value);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return out.str();
}

std::string calibration_report(const BootstrapCalibration& calibration, const BootstrapPlan& plan,
                               AggregationRule rule) {
  const auto& chart = calibration.chart(rule);
  Json quantiles = Json::object();
  const auto& ref = chart.reference;
  for (const double level : {0.001, 0.005, 0.01, 0.05, 0.1, 0.25, 0.5}) {
    if (ref.empty()) {
      break;
    }
    const auto idx = std::min(ref.size() - 1,
                              static_cast<std::size_t>(std::ceil(level * static_cast<double>(ref.size()))) - (level > 0 ? 1 : 0));
    std::ostringstream key;
    key << level;
    quantiles[key.str()] = ref[idx];
  }
  const Json j{{"m", calibration.m},
               {"m_star", calibration.m_star},
               {"b1", plan.b1},
               {"b2", plan.b2},
               {"arl0", plan.arl0},
               {"rule", to_string(rule)},
               {"limit", chart.limit},
               {"k", chart.k},
               {"m_prime", chart.m()},
               {"score_quantiles", quantiles}};
  return j.dump(2) + "\n";
}

}  // namespace profmon
