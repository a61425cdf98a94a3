#include "qscope/analysis.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qscope/errors.hpp"
#include "qscope/quadrature.hpp"

namespace qscope {

PhaseSpaceGrid PhaseSpaceGrid::covering(int motional_dim, int points) {
  double r = std::sqrt(2.0 * motional_dim) + 2.5;
  PhaseSpaceGrid g;
  g.z_min = g.p_min = -r;
  g.z_max = g.p_max = r;
  g.nz = g.np = points;
  return g;
}

void PhaseSpaceGrid::validate(int motional_dim) const {
  if (nz < 64 || np < 64) throw ConfigError("phase-space grid needs at least 64 points per axis");
  double r = std::sqrt(2.0 * motional_dim);
  if (z_min > -r || z_max < r || p_min > -r || p_max < r)
    throw ConfigError("phase-space grid must cover +-sqrt(2*motional_dim)");
}

Eigen::MatrixXd wigner(const DensityOperator& rho, const PhaseSpaceGrid& grid,
                       bool check_normalization) {
  if (!rho.basis.motional_only()) throw ConfigError("wigner expects a motional-only state");
  const int d = rho.basis.motional_dim;
  grid.validate(d);
  const double reach = std::sqrt(2.0 * d) + 5.0;
  const double h = 0.04;
  const int ny = static_cast<int>(std::ceil(reach / h));
  std::vector<double> ys(2 * ny + 1);
  for (int k = -ny; k <= ny; ++k) ys[k + ny] = k * h;

  Eigen::MatrixXd W(grid.nz, grid.np);
  std::vector<double> plus(d), minus(d);
  Vector g(ys.size());
  for (int i = 0; i < grid.nz; ++i) {
    double z = grid.z(i);
    for (std::size_t k = 0; k < ys.size(); ++k) {
      hermite_functions(z + ys[k], d, plus.data());
      hermite_functions(z - ys[k], d, minus.data());
      Eigen::Map<const Eigen::VectorXd> a(plus.data(), d), b(minus.data(), d);
      g(k) = (a.cast<cplx>().transpose() * rho.matrix * b.cast<cplx>())(0, 0);
    }
    for (int j = 0; j < grid.np; ++j) {
      double p = grid.p(j);
      cplx acc = 0.0;
      for (std::size_t k = 0; k < ys.size(); ++k) acc += g(k) * std::polar(1.0, -2.0 * p * ys[k]);
      W(i, j) = (acc * h).real() / std::numbers::pi;
    }
  }
  if (check_normalization) {
    double dz = (grid.z_max - grid.z_min) / (grid.nz - 1);
    double dp = (grid.p_max - grid.p_min) / (grid.np - 1);
    double total = 0.0;
    for (int i = 0; i < grid.nz; ++i)
      for (int j = 0; j < grid.np; ++j) {
        double wz = (i == 0 || i == grid.nz - 1) ? 0.5 : 1.0;
        double wp = (j == 0 || j == grid.np - 1) ? 0.5 : 1.0;
        total += wz * wp * W(i, j);
      }
    total *= dz * dp;
    if (std::abs(total - rho.trace()) > 1e-3) {
      std::ostringstream os;
      os << "Wigner grid too coarse: integral " << total << " vs trace " << rho.trace();
      throw NumericalError(os.str());
    }
  }
  return W;
}

std::vector<double> position_density(const DensityOperator& rho, const PhaseSpaceGrid& grid) {
  const int d = rho.basis.motional_dim;
  std::vector<double> out(grid.nz), psi(d);
  for (int i = 0; i < grid.nz; ++i) {
    hermite_functions(grid.z(i), d, psi.data());
    Eigen::Map<const Eigen::VectorXd> a(psi.data(), d);
    out[i] = (a.cast<cplx>().transpose() * rho.matrix * a.cast<cplx>())(0, 0).real();
  }
  return out;
}

std::vector<double> eqnd_profile(const FocusConfig& focus, const std::vector<double>& z0, int n) {
  if (n < 0) throw ConfigError("level index must be >= 0");
  std::vector<double> out;
  out.reserve(z0.size());
  BasisSpec b(std::max(2, n + 1));
  for (double z : z0) {
    Operator F = build_f_matrix(focusing_function(focus.at(z)), b);
    out.push_back(F.matrix(n, n).real());
  }
  return out;
}

double ho_density(int n, double x) {
  std::vector<double> psi = hermite_functions(x, n + 1);
  return psi[n] * psi[n];
}

SnrAnalytic snr_analytic(int n, double z0, double gamma_T, const MicroscopeParams& params,
                         double sigma, double scan_length, int motional_dim, int points) {
  if (n < 0 || n >= motional_dim) throw ConfigError("level outside truncation");
  if (!(scan_length > 0) || !(sigma > 0) || !(gamma_T >= 0))
    throw ConfigError("snr_analytic needs positive sigma, scan length and gamma*T");
  SnrAnalytic out;
  double psi2 = ho_density(n, z0);
  out.shot_noise_limited = 4.0 * gamma_T * (sigma / scan_length) * psi2 * psi2;
  if (params.lsp_rate() > 0 && params.gamma > 0) {
    // Trapezoid average of B_n(z0) over the scan.
    double acc = 0.0;
    for (int i = 0; i < points; ++i) {
      double z = -0.5 * scan_length + scan_length * i / (points - 1);
      ModelOperators ops = assemble_model(focusing_function(params.focus.at(z)), params,
                                          BasisSpec(motional_dim), {false, false});
      double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
      acc += w * ops.rates_B(n);
    }
    double b_avg = acc / (points - 1);
    out.loss_probability = b_avg * gamma_T / params.gamma;
  }
  out.with_loss = out.shot_noise_limited / (1.0 + out.shot_noise_limited * out.loss_probability);
  return out;
}

double resolution_limit(double cooperativity, double snr_target, double vna_max_er,
                        double l0_over_lambda0) {
  if (!(cooperativity > 0) || !(snr_target > 0) || !(vna_max_er > 0) || !(l0_over_lambda0 > 0))
    throw ConfigError("resolution_limit inputs must be positive");
  double x = snr_target * snr_target / cooperativity / vna_max_er * l0_over_lambda0 *
             l0_over_lambda0;
  return std::pow(x, 0.25);
}

double optimal_gamma_T(double k0_sigma, double scan_length, double cooperativity,
                       double vna_max_er) {
  return k0_sigma * scan_length * std::sqrt(cooperativity * vna_max_er);
}

DensityOperator ensemble_average_state(const std::vector<Trajectory>& trajectories,
                                       std::size_t snapshot) {
  if (trajectories.empty()) throw ConfigError("no trajectories to average");
  DensityOperator avg;
  for (const auto& tr : trajectories) {
    if (snapshot >= tr.snapshots.size()) throw ConfigError("trajectory is missing snapshots");
    const DensityOperator& s = tr.snapshots[snapshot];
    if (avg.matrix.size() == 0) {
      avg.matrix = Matrix::Zero(s.matrix.rows(), s.matrix.cols());
      avg.basis = s.basis;
    }
    avg.matrix += s.matrix;
  }
  avg.matrix /= static_cast<double>(trajectories.size());
  return avg;
}

double compare_to_lindblad(const DensityOperator& average, const DensityOperator& reference) {
  if (average.matrix.rows() != reference.matrix.rows())
    throw DimensionError("compare_to_lindblad size mismatch");
  return trace_norm(average.matrix - reference.matrix);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ConfigError("linear_fit needs matching arrays of size >= 2");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_stderr = std::sqrt(rss / (n - 2) / sxx);
  }
  return f;
}

LinearFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw ConfigError("log_log_fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return linear_fit(lx, ly);
}

double slope_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
  }
  return sxy / sxx;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ConfigError("pearson needs matching arrays");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace qscope
