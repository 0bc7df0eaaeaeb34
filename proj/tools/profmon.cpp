#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "profmon/calibration.hpp"
#include "profmon/csv.hpp"
#include "profmon/error.hpp"
#include "profmon/harness.hpp"
#include "profmon/processes.hpp"

namespace {

using namespace profmon;

struct Output {
  std::string path;
  std::string format = "json";

  void write(const std::string& text) const {
    if (path.empty() || path == "-") {
      std::cout << text;
      return;
    }
    std::ofstream out(path);
    if (!out) {
      throw Error(ErrorCode::Io, "cannot write " + path);
    }
    out << text;
  }
};

struct PlanFlags {
  std::size_t b1 = 100;
  std::size_t b2 = 5;
  std::size_t m_star = 0;
  std::size_t inner_size = 0;

  void add(CLI::App& app) {
    app.add_option("--b1", b1, "Outer bootstrap resamples")->capture_default_str();
    app.add_option("--b2", b2, "Inner draws per resample, in units of ARL0")->capture_default_str();
    app.add_option("--m-star", m_star, "Profiles reserved for the bootstrap fit (0: m/2)")
        ->capture_default_str();
    app.add_option("--inner-size", inner_size, "Synthetic historical size per resample (0: m)")
        ->capture_default_str();
  }
  BootstrapPlan plan(std::size_t arl0) const {
    BootstrapPlan p;
    p.b1 = b1;
    p.b2 = b2;
    p.m_star = m_star;
    p.inner_size = inner_size;
    p.arl0 = arl0;
    return p;
  }
};

std::vector<AggregationRule> parse_rules(const std::vector<std::string>& names) {
  std::vector<AggregationRule> out;
  for (const auto& n : names) {
    if (n == "both") {
      out.push_back(AggregationRule::Minimum);
      out.push_back(AggregationRule::GeometricMean);
    } else {
      out.push_back(parse_rule(n));
    }
  }
  return out;
}

ProcessSpec with_xi(ProcessSpec spec, double xi) {
  std::visit(
      [xi](auto& kind) {
        using K = std::decay_t<decltype(kind)>;
        if constexpr (!std::is_same_v<K, Sine> && !std::is_same_v<K, Monomial>) {
          kind.xi = xi;
        } else {
          throw Error(ErrorCode::InvalidArgument,
                      "--xi needs an out-of-control scenario with a shift parameter");
        }
      },
      spec.kind);
  return spec;
}

std::size_t default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::string round2(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online profile monitoring with conditional Gaussian p-values"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::size_t workers = default_workers();
  Output output;
  auto add_common = [&](CLI::App* sub, bool formats) {
    sub->add_option("--seed", seed, "Root random seed")->capture_default_str();
    sub->add_option("--workers", workers, "Worker threads")->capture_default_str();
    sub->add_option("-o,--out", output.path, "Output file (default stdout)");
    if (formats) {
      sub->add_option("--format", output.format, "json or csv")
          ->check(CLI::IsMember({"json", "csv"}))
          ->capture_default_str();
    }
  };

  // calibrate ---------------------------------------------------------------
  auto* calibrate = app.add_subcommand("calibrate", "Bootstrap control limit from historical profiles");
  std::string cal_historical;
  int cal_study = 1;
  std::size_t cal_m = 1000;
  std::size_t cal_arl0 = 200;
  std::vector<std::string> cal_rules{"geometric_mean"};
  PlanFlags cal_plan;
  calibrate->add_option("--historical", cal_historical, "Historical profile CSV");
  calibrate->add_option("--study", cal_study, "Simulate historical data from study 1-3 instead")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  calibrate->add_option("--m", cal_m, "Simulated historical size")->capture_default_str();
  calibrate->add_option("--arl0", cal_arl0, "Target in-control ARL")->capture_default_str();
  calibrate->add_option("--rule", cal_rules, "minimum, geometric_mean or both")
      ->capture_default_str();
  cal_plan.add(*calibrate);
  add_common(calibrate, false);

  // simulate ----------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Replicated FAR / ARL1 study");
  std::string sim_config;
  int sim_study = 1;
  std::vector<double> sim_xi;
  bool paper_scale = false;
  std::optional<std::size_t> sim_reps, sim_arl0, sim_m, sim_competitor_draws;
  std::optional<std::int64_t> sim_cap, sim_changepoint;
  std::optional<std::size_t> sim_b1, sim_b2, sim_m_star;
  std::vector<std::string> sim_rules, sim_charts;
  simulate->add_option("--config", sim_config, "JSON experiment config");
  simulate->add_option("--study", sim_study, "Simulation study 1-3")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  simulate->add_option("--xi", sim_xi, "Shift sizes; one report per value");
  simulate->add_flag("--paper-scale", paper_scale,
                     "reps 1000, arl0 1000, cap 25000, changepoint 500, b2 20");
  simulate->add_option("--reps", sim_reps, "Replications");
  simulate->add_option("--arl0", sim_arl0, "Target in-control ARL");
  simulate->add_option("--m", sim_m, "Historical profiles per replication");
  simulate->add_option("--cap", sim_cap, "Truncation time");
  simulate->add_option("--changepoint", sim_changepoint, "Last in-control time step");
  simulate->add_option("--b1", sim_b1, "Outer bootstrap resamples");
  simulate->add_option("--b2", sim_b2, "Inner draws per resample, in units of ARL0");
  simulate->add_option("--m-star", sim_m_star, "Profiles reserved for the bootstrap fit");
  simulate->add_option("--rule", sim_rules, "minimum, geometric_mean or both");
  simulate->add_option("--charts", sim_charts, "proposed, hotelling_t2, pca");
  simulate->add_option("--competitor-draws", sim_competitor_draws,
                       "In-control draws to calibrate competitor limits");
  add_common(simulate, true);

  // runlength-verify --------------------------------------------------------
  auto* verify = app.add_subcommand("runlength-verify", "Run-length table of the order-statistic chart");
  std::vector<std::string> rl_dists{"normal", "t2", "cauchy", "chisq2", "beta1_10"};
  std::vector<std::size_t> rl_m{200, 400, 1000, 2000};
  std::size_t rl_arl0 = 200;
  std::size_t rl_reps = 10000;
  verify->add_option("--dist", rl_dists, "Reference distributions")->capture_default_str();
  verify->add_option("--m", rl_m, "Reference sample sizes (multiples of arl0)")
      ->capture_default_str();
  verify->add_option("--arl0", rl_arl0, "Target in-control ARL")->capture_default_str();
  verify->add_option("--reps", rl_reps, "Replications per cell")->capture_default_str();
  add_common(verify, false);

  // monitor-csv -------------------------------------------------------------
  auto* monitor = app.add_subcommand("monitor-csv", "Permutation monitoring of profile CSV files");
  std::string mon_historical, mon_online;
  MonitorCsvConfig mon;
  std::vector<std::string> mon_rules{"both"};
  PlanFlags mon_plan;
  monitor->add_option("--historical", mon_historical, "In-control profile CSV")->required();
  monitor->add_option("--online", mon_online, "Online profile pool CSV")->required();
  monitor->add_option("--arl0", mon.arl0, "Target in-control ARL")->capture_default_str();
  monitor->add_option("--reps", mon.reps, "Permutation replications")->capture_default_str();
  monitor->add_option("--cap", mon.cap, "Truncation time")->capture_default_str();
  monitor->add_option("--changepoint", mon.changepoint,
                      "Leading in-control steps drawn from the historical pool")
      ->capture_default_str();
  monitor->add_option("--rule", mon_rules, "minimum, geometric_mean or both")
      ->capture_default_str();
  mon_plan.add(*monitor);
  add_common(monitor, true);

  // snr-table ---------------------------------------------------------------
  auto* snr = app.add_subcommand("snr-table", "Signal-to-noise ratio per site for global shifts");
  std::vector<double> snr_xi{0.1, 0.2, 0.3, 0.4, 0.5};
  double snr_noise = 0.1;
  std::size_t snr_n = 10;
  snr->add_option("--xi", snr_xi, "Shift sizes")->capture_default_str();
  snr->add_option("--noise-sd", snr_noise, "Noise standard deviation")->capture_default_str();
  snr->add_option("--sites", snr_n, "Number of equispaced sites")->capture_default_str();
  snr->add_option("-o,--out", output.path, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) {
      std::vector<ProfileSample> historical;
      if (!cal_historical.empty()) {
        historical = read_profiles_csv(cal_historical);
      } else {
        RngStream rng = RngStream(seed).child(0);
        const auto spec = study_in_control(cal_study);
        const auto grid = study_grid(cal_study);
        for (std::size_t i = 0; i < cal_m; ++i) {
          historical.push_back(draw_profile(spec, grid, rng));
        }
      }
      BootstrapPlan plan = cal_plan.plan(cal_arl0);
      if (plan.m_star == 0) {
        plan.m_star = historical.size() / 2;
      }
      const auto rules = parse_rules(cal_rules);
      RngStream rng = RngStream(seed).child(1);
      const auto calibration = bootstrap_calibrate(historical, plan, rules, rng, workers);
      std::string text;
      for (const auto rule : rules) {
        text += calibration_report(calibration, plan, rule);
      }
      output.write(text);
    } else if (simulate->parsed()) {
      ExperimentConfig config = sim_config.empty() ? ExperimentConfig::for_study(sim_study, 0.0)
                                                   : load_config(sim_config);
      if (paper_scale) {
        config.paper_scale();
      }
      if (sim_reps) config.reps = *sim_reps;
      if (sim_arl0) config.arl0 = *sim_arl0;
      if (sim_m) config.m = *sim_m;
      if (sim_cap) config.cap = *sim_cap;
      if (sim_changepoint) config.changepoint = *sim_changepoint;
      if (sim_b1) config.plan.b1 = *sim_b1;
      if (sim_b2) config.plan.b2 = *sim_b2;
      if (sim_m_star) config.plan.m_star = *sim_m_star;
      if (sim_competitor_draws) config.competitor_draws = *sim_competitor_draws;
      config.seed = seed;
      if (!sim_rules.empty()) config.rules = parse_rules(sim_rules);
      if (!sim_charts.empty()) {
        config.charts.clear();
        for (const auto& c : sim_charts) config.charts.push_back(parse_chart(c));
      }
      std::vector<ScenarioReport> reports;
      if (sim_xi.empty()) {
        reports.push_back(run_scenario(config, workers));
      }
      for (const double xi : sim_xi) {
        ExperimentConfig c = config;
        c.scenario.out_of_control = with_xi(c.scenario.out_of_control, xi);
        std::cerr << "xi = " << xi << " ...\n";
        reports.push_back(run_scenario(c, workers));
      }
      const auto format = parse_format(output.format);
      output.write(reports.size() == 1 ? emit_report(reports.front(), format)
                                       : emit_reports(reports, format));
    } else if (verify->parsed()) {
      std::vector<ReferenceDistribution> dists;
      for (const auto& d : rl_dists) dists.push_back(parse_distribution(d));
      output.write(runlength_csv(runlength_verify(dists, rl_m, rl_arl0, rl_reps, seed, workers)));
    } else if (monitor->parsed()) {
      mon.rules = parse_rules(mon_rules);
      mon.plan = mon_plan.plan(mon.arl0);
      mon.seed = seed;
      const auto report = monitor_csv(mon_historical, mon_online, mon, workers);
      output.write(emit_report(report, parse_format(output.format)));
    } else if (snr->parsed()) {
      const auto grid = MonitorGrid::equispaced(0.1, 2.0 * M_PI - 0.1, snr_n);
      const auto table = snr_table(snr_xi, grid, snr_noise);
      std::ostringstream out;
      out << "xi";
      for (std::size_t i = 0; i < grid.size(); ++i) out << ",x" << i + 1;
      out << '\n';
      for (Eigen::Index r = 0; r < table.rows(); ++r) {
        out << snr_xi[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < table.cols(); ++c) out << ',' << round2(table(r, c));
        out << '\n';
      }
      output.write(out.str());
    }
  } catch (const Error& e) {
    std::cerr << "profmon: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}
