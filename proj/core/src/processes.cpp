#include "profmon/processes.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "profmon/error.hpp"

namespace profmon {

MonitorGrid MonitorGrid::equispaced(double lower, double upper, std::size_t n) {
  if (n < 2 || !(upper > lower)) {
    throw Error(ErrorCode::InvalidArgument, "MonitorGrid: need n >= 2 and upper > lower");
  }
  MonitorGrid g;
  g.lower = lower;
  g.upper = upper;
  g.sites.resize(n);
  const double step = (upper - lower) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    g.sites[i] = lower + step * static_cast<double>(i);
  }
  g.sites.back() = upper;
  return g;
}

void MonitorGrid::validate() const {
  if (sites.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "MonitorGrid: need at least two sites");
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (!(sites[i] >= lower && sites[i] <= upper)) {
      throw Error(ErrorCode::InvalidArgument, "MonitorGrid: site outside the domain");
    }
    if (i > 0 && !(sites[i] > sites[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "MonitorGrid: sites must be strictly increasing");
    }
  }
}

namespace {

struct LinearProcess {
  Eigen::MatrixXd loadings;
  Eigen::VectorXd coef_mean;
  double coef_sd = 1.0;
  Eigen::VectorXd noise_scale;
  Eigen::VectorXd shift;
  Eigen::Index z_site = -1;
  double z_scale = 0.0;
};

struct BaseDesign {
  Eigen::MatrixXd basis;  // n x p
  double coef_mean;
  double coef_sd;
};

BaseDesign design(const BaseProcess& base, const MonitorGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (const auto* s = std::get_if<Sine>(&base)) {
    Eigen::MatrixXd basis(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      basis(i, 0) = std::sin(grid.sites[static_cast<std::size_t>(i)]);
    }
    return {basis, s->coef_mean, s->coef_sd};
  }
  const auto& mono = std::get<Monomial>(base);
  if (mono.degree < 0) {
    throw Error(ErrorCode::InvalidArgument, "Monomial: degree must be >= 0");
  }
  Eigen::MatrixXd basis(n, mono.degree + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    double power = 1.0;
    for (int k = 0; k <= mono.degree; ++k) {
      basis(i, k) = power;
      power *= grid.sites[static_cast<std::size_t>(i)];
    }
  }
  return {basis, mono.coef_mean, mono.coef_sd};
}

LinearProcess from_base(const BaseProcess& base, const MonitorGrid& grid) {
  const BaseDesign d = design(base, grid);
  const auto n = d.basis.rows();
  LinearProcess lp;
  lp.loadings = d.basis;
  lp.coef_mean = Eigen::VectorXd::Constant(d.basis.cols(), d.coef_mean);
  lp.coef_sd = d.coef_sd;
  lp.noise_scale = Eigen::VectorXd::Ones(n);
  lp.shift = Eigen::VectorXd::Zero(n);
  return lp;
}

LinearProcess linearize(const ProcessSpec& spec, const MonitorGrid& grid) {
  spec.validate(grid);
  return std::visit(
      [&](const auto& kind) -> LinearProcess {
        using K = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<K, Sine> || std::is_same_v<K, Monomial>) {
          return from_base(kind, grid);
        } else if constexpr (std::is_same_v<K, GlobalShift>) {
          LinearProcess lp = from_base(kind.base, grid);
          lp.shift.setConstant(kind.xi);
          return lp;
        } else if constexpr (std::is_same_v<K, BrokenMonitor>) {
          LinearProcess lp = from_base(kind.base, grid);
          const auto j = static_cast<Eigen::Index>(kind.site);
          lp.loadings.row(j) *= 1.0 - kind.xi;
          lp.noise_scale(j) = 1.0 - kind.xi;
          lp.z_site = j;
          lp.z_scale = kind.xi;
          return lp;
        } else {
          LinearProcess lp = from_base(kind.base, grid);
          lp.coef_mean.array() += kind.xi;
          const auto pivot = static_cast<Eigen::Index>(kind.pivot_site);
          const Eigen::RowVectorXd pivot_row = lp.loadings.row(pivot);
          for (Eigen::Index i = pivot + 1; i < lp.loadings.rows(); ++i) {
            lp.loadings.row(i) = 2.0 * pivot_row - lp.loadings.row(i);
          }
          return lp;
        }
      },
      spec.kind);
}

}  // namespace

void ProcessSpec::validate(const MonitorGrid& grid) const {
  grid.validate();
  if (!(noise_sd > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "ProcessSpec: noise_sd must be > 0");
  }
  auto check_xi = [](double xi) {
    if (!(xi >= 0.0 && xi <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "ProcessSpec: xi must lie in [0, 1]");
    }
  };
  if (const auto* b = std::get_if<BrokenMonitor>(&kind)) {
    check_xi(b->xi);
    if (b->site >= grid.size()) {
      throw Error(ErrorCode::InvalidArgument, "BrokenMonitor: site out of range");
    }
  } else if (const auto* g = std::get_if<GlobalShift>(&kind)) {
    check_xi(g->xi);
  } else if (const auto* t = std::get_if<TrajectorySwitch>(&kind)) {
    check_xi(t->xi);
    if (t->pivot_site >= grid.size()) {
      throw Error(ErrorCode::InvalidArgument, "TrajectorySwitch: pivot site out of range");
    }
  }
}

ProcessSampler::ProcessSampler(const ProcessSpec& spec, const MonitorGrid& grid) {
  LinearProcess lp = linearize(spec, grid);
  loadings_ = std::move(lp.loadings);
  coef_mean_ = std::move(lp.coef_mean);
  coef_sd_ = lp.coef_sd;
  noise_scale_ = std::move(lp.noise_scale);
  shift_ = std::move(lp.shift);
  z_site_ = lp.z_site;
  z_scale_ = lp.z_scale;
  noise_sd_ = spec.noise_sd;
  coef_.resize(coef_mean_.size());
}

void ProcessSampler::draw(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) {
  for (Eigen::Index k = 0; k < coef_.size(); ++k) {
    coef_(k) = coef_mean_(k) + coef_sd_ * rng.normal();
  }
  out.noalias() = loadings_ * coef_;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) += noise_sd_ * noise_scale_(i) * rng.normal() + shift_(i);
  }
  if (z_site_ >= 0) {
    out(z_site_) += z_scale_ * rng.normal();
  }
}

GaussianModel ProcessSampler::model() const {
  Eigen::VectorXd mean = loadings_ * coef_mean_ + shift_;
  Eigen::MatrixXd cov = coef_sd_ * coef_sd_ * loadings_ * loadings_.transpose();
  cov.diagonal().array() += noise_sd_ * noise_sd_ * noise_scale_.array().square();
  if (z_site_ >= 0) {
    cov(z_site_, z_site_) += z_scale_ * z_scale_;
  }
  return GaussianModel(std::move(mean), std::move(cov));
}

void draw_profiles(const ProcessSpec& spec, const MonitorGrid& grid, RngStream& rng,
                   Eigen::MatrixXd& out) {
  ProcessSampler sampler(spec, grid);
  if (static_cast<std::size_t>(out.rows()) != sampler.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "draw_profiles: output must have n rows");
  }
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    sampler.draw(rng, out.col(c));
  }
}

ProfileSample draw_profile(const ProcessSpec& spec, const MonitorGrid& grid, RngStream& rng) {
  ProcessSampler sampler(spec, grid);
  ProfileSample y{Eigen::VectorXd(static_cast<Eigen::Index>(sampler.dim())), 0};
  sampler.draw(rng, y.values);
  return y;
}

GaussianModel true_model(const ProcessSpec& spec, const MonitorGrid& grid) {
  return ProcessSampler(spec, grid).model();
}

Eigen::MatrixXd snr_table(const std::vector<double>& xi_values, const MonitorGrid& grid,
                          double noise_sd) {
  Eigen::MatrixXd table(static_cast<Eigen::Index>(xi_values.size()),
                        static_cast<Eigen::Index>(grid.size()));
  for (std::size_t r = 0; r < xi_values.size(); ++r) {
    for (std::size_t c = 0; c < grid.size(); ++c) {
      const double s = std::sin(grid.sites[c]);
      table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          xi_values[r] / std::sqrt(s * s + noise_sd * noise_sd);
    }
  }
  return table;
}

MonitorGrid study_grid(int study, std::size_t n) {
  switch (study) {
    case 1:
    case 2:
      return MonitorGrid::equispaced(0.1, 2.0 * std::numbers::pi - 0.1, n);
    case 3:
      return MonitorGrid::equispaced(0.0, 1.0, n);
    default:
      throw Error(ErrorCode::InvalidArgument, "unknown simulation study " + std::to_string(study));
  }
}

ProcessSpec study_in_control(int study) {
  switch (study) {
    case 1:
    case 2:
      return ProcessSpec{Sine{0.0, 1.0}, 0.1};
    case 3:
      return ProcessSpec{Monomial{6, 0.0, 1.0}, 0.1};
    default:
      throw Error(ErrorCode::InvalidArgument, "unknown simulation study " + std::to_string(study));
  }
}

ProcessSpec study_out_of_control(int study, double xi) {
  switch (study) {
    case 1:
      return ProcessSpec{GlobalShift{Sine{0.0, 1.0}, xi}, 0.1};
    case 2:
      return ProcessSpec{BrokenMonitor{Sine{0.0, 1.0}, xi, 2}, 0.1};
    case 3:
      return ProcessSpec{TrajectorySwitch{Monomial{6, 0.0, 1.0}, 5, xi}, 0.1};
    default:
      throw Error(ErrorCode::InvalidArgument, "unknown simulation study " + std::to_string(study));
  }
}

}  // namespace profmon
