#include "qscope/focus.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qscope/errors.hpp"
#include "qscope/quadrature.hpp"

namespace qscope {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPanels = 16;
constexpr int kNodesPerPanel = 128;

double detuning_term(const FocusConfig& cfg, double z) {
  return 1.0 + cfg.beta - std::cos(cfg.k0_l0 * (z - cfg.z0));
}

// Golden-section refinement of a unimodal maximum on [a, b].
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

FocusConfig FocusConfig::make(double epsilon, double beta, double k0_l0, double z0) {
  FocusConfig c;
  c.epsilon = epsilon;
  c.beta = beta;
  c.k0_l0 = k0_l0;
  c.z0 = z0;
  c.window = default_window(k0_l0);
  return c;
}

double FocusConfig::default_window(double k0_l0) { return kPi / k0_l0; }

double FocusConfig::lambda0() const { return 2.0 * kPi / k0_l0; }

FocusConfig FocusConfig::at(double new_z0) const {
  FocusConfig c = *this;
  c.z0 = new_z0;
  return c;
}

void FocusConfig::validate() const {
  auto fail = [](const std::string& key, double v, const std::string& why) {
    std::ostringstream os;
    os << key << " = " << v << ": " << why;
    throw ConfigError(os.str());
  };
  if (!(epsilon > 0 && epsilon <= 1)) fail("epsilon", epsilon, "must lie in (0, 1]");
  if (!(beta > 0 && beta <= 1)) fail("beta", beta, "must lie in (0, 1]");
  if (!(k0_l0 > 0) || !std::isfinite(k0_l0)) fail("k0_l0", k0_l0, "must be positive");
  if (!std::isfinite(z0)) fail("z0", z0, "must be finite");
  if (!(window > 0)) fail("window", window, "must be positive");
  if (!(window * k0_l0 < 2.0 * kPi))
    fail("window", window, "admits more than one focal point (window*k0_l0 >= 2*pi)");
}

double k0_l0_from_frequencies(double recoil_freq, double trap_freq) {
  return std::sqrt(2.0 * recoil_freq / trap_freq);
}

double mixing_angle(const FocusConfig& cfg, double z) {
  return std::atan2(detuning_term(cfg, z), cfg.epsilon);
}

double cos2_alpha(const FocusConfig& cfg, double z) {
  double s = detuning_term(cfg, z);
  double e2 = cfg.epsilon * cfg.epsilon;
  return e2 / (e2 + s * s);
}

double nonadiabatic_potential(const FocusConfig& cfg, double z) {
  double u = cfg.k0_l0 * (z - cfg.z0);
  double s = detuning_term(cfg, z);
  double dalpha = cfg.k0_l0 * cfg.epsilon * std::sin(u) / (cfg.epsilon * cfg.epsilon + s * s);
  return 0.5 * dalpha * dalpha;
}

double nonadiabatic_potential_expanded(const FocusConfig& cfg, double z) {
  double x = cfg.k0_l0 * (z - cfg.z0);
  double q = x * x + 2.0 * cfg.beta;
  double r = 4.0 * cfg.epsilon * x / (q * q + 4.0 * cfg.epsilon * cfg.epsilon);
  return cfg.recoil_energy() * r * r;
}

double resolution_analytic(const FocusConfig& cfg) {
  double ratio = cfg.epsilon / cfg.beta;
  return std::sqrt(2.0 * cfg.beta) / kPi * std::sqrt(std::sqrt(2.0 + ratio * ratio) - 1.0);
}

double vna_maximum(const FocusConfig& cfg, double* argmax) {
  auto v = [&](double d) { return nonadiabatic_potential(cfg, cfg.z0 + d); };
  const int coarse = 4000;
  double h = cfg.window / coarse;
  int best = 1;
  double best_v = v(h);
  for (int i = 2; i <= coarse; ++i) {
    double vi = v(i * h);
    if (vi > best_v) {
      best_v = vi;
      best = i;
    }
  }
  double lo = (best - 1) * h, hi = std::min(cfg.window, (best + 1) * h);
  double d = golden_max(v, lo, hi, 1e-12);
  if (argmax) *argmax = d;
  return std::max(v(d), best_v);
}

double fwhm_numeric(const FocusConfig& cfg) {
  double half = 0.5 * cos2_alpha(cfg, cfg.z0);
  auto side = [&](double sign) {
    double a = 0.0, b = cfg.window;
    if (cos2_alpha(cfg, cfg.z0 + sign * b) > half)
      throw ConfigError("focus window is narrower than the half maximum of f");
    while (b - a > 1e-12) {
      double m = 0.5 * (a + b);
      (cos2_alpha(cfg, cfg.z0 + sign * m) > half ? a : b) = m;
    }
    return 0.5 * (a + b);
  };
  return side(+1.0) + side(-1.0);
}

double FocusProfile::operator()(double z) const {
  if (!inside(z)) return 0.0;
  return norm_constant * cos2_alpha(config, z);
}

double FocusProfile::sin_alpha(double z) const { return std::sin(mixing_angle(config, z)); }

double FocusProfile::tan_alpha(double z) const {
  return detuning_term(config, z) / config.epsilon;
}

FocusProfile focusing_function(const FocusConfig& cfg) {
  cfg.validate();
  FocusProfile p;
  p.config = cfg;

  double integral = 0.0;
  double panel = 2.0 * cfg.window / kPanels;
  for (int k = 0; k < kPanels; ++k) {
    double a = cfg.z0 - cfg.window + k * panel;
    QuadratureRule q = gauss_legendre(kNodesPerPanel, a, a + panel);
    for (int i = 0; i < kNodesPerPanel; ++i) integral += q.weights[i] * cos2_alpha(cfg, q.nodes[i]);
  }
  p.norm_constant = 1.0 / integral;

  double lambda0 = cfg.lambda0();
  p.sigma_analytic_lambda0 = resolution_analytic(cfg);
  p.sigma_analytic_l0 = p.sigma_analytic_lambda0 * lambda0;
  p.sigma_numeric_l0 = fwhm_numeric(cfg);
  p.sigma_numeric_lambda0 = p.sigma_numeric_l0 / lambda0;
  p.vna_max_hw = vna_maximum(cfg, &p.vna_argmax);
  p.vna_max_er = p.vna_max_hw / cfg.recoil_energy();
  double r = cfg.beta / cfg.epsilon;
  p.overlap_max = 1.0 / (1.0 + r * r);
  return p;
}

FocusConfig design_for_targets(double sigma_target, double vna_budget, double k0_l0, double z0) {
  if (!(k0_l0 > 0)) throw ConfigError("k0_l0 must be positive");
  double window = FocusConfig::default_window(k0_l0);
  if (!(sigma_target > 0) || sigma_target >= window)
    throw ConfigError("sigma_target must lie in (0, window); window = " + std::to_string(window));
  if (!(vna_budget > 0)) throw ConfigError("vna_budget must be positive");

  double s = sigma_target * k0_l0 / (2.0 * kPi);
  // Closed-form inversion of the resolution formula for β at fixed ratio r = ε/β.
  auto beta_for = [&](double r) {
    return (kPi * s) * (kPi * s) / (2.0 * (std::sqrt(2.0 + r * r) - 1.0));
  };
  auto config_for = [&](double r) {
    double b = beta_for(r);
    return FocusConfig::make(r * b, b, k0_l0, z0);
  };

  if (std::isinf(vna_budget)) {
    FocusConfig c = config_for(1.0);
    c.validate();
    return c;
  }

  auto excess = [&](double r) { return vna_maximum(config_for(r)) - vna_budget; };
  double hi = 1.0, lo = 1e-6;
  if (excess(hi) < 0 || excess(lo) > 0) {
    std::ostringstream os;
    os << "vna_budget " << vna_budget << " has no solution with eps/beta in (0, 1] at sigma "
       << sigma_target;
    throw ConfigError(os.str());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    double mid = std::sqrt(lo * hi);
    (excess(mid) > 0 ? hi : lo) = mid;
  }
  FocusConfig c = config_for(0.5 * (lo + hi));
  c.validate();
  return c;
}

}  // namespace qscope
