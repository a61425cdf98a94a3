#pragma once

#include <limits>

namespace qscope {

/// Raman configuration Ω_g = εΩ_c, Ω_r(z) = Ω_c[1 + β − cos k0(z − z0)] in HO units.
struct FocusConfig {
  double epsilon = 0.1;
  double beta = 0.2;
  double k0_l0 = 0.7779866052154991;
  double z0 = 0.0;
  /// Half-width of the single-focus domain around z0, in ℓ0.
  double window = 0.0;

  /// Config with the default window π/k0 (half a focal period on each side).
  static FocusConfig make(double epsilon, double beta, double k0_l0, double z0 = 0.0);
  static double default_window(double k0_l0);

  double lambda0() const;
  double recoil_energy() const { return 0.5 * k0_l0 * k0_l0; }
  /// Throws ConfigError naming the offending field.
  void validate() const;
  FocusConfig at(double new_z0) const;
};

/// √(2 E_r / ħω) for recoil and trap frequencies given in the same units.
double k0_l0_from_frequencies(double recoil_freq, double trap_freq);

/// α(z) with tan α = Ω_r(z)/Ω_g, in (0, π/2).
double mixing_angle(const FocusConfig& cfg, double z);
double cos2_alpha(const FocusConfig& cfg, double z);

/// Exact V_na = ½(∂_z α)² in ħω.
double nonadiabatic_potential(const FocusConfig& cfg, double z);
/// Small-|z − z0| expansion E_r{4εx/((x² + 2β)² + 4ε²)}², x = k0(z − z0), in ħω.
double nonadiabatic_potential_expanded(const FocusConfig& cfg, double z);

/// Closed-form FWHM σ/λ0 = (√(2β)/π)[√(2 + (ε/β)²) − 1]^{1/2}.
double resolution_analytic(const FocusConfig& cfg);

struct FocusProfile {
  FocusConfig config;
  double sigma_analytic_lambda0 = 0;
  double sigma_analytic_l0 = 0;
  double sigma_numeric_l0 = 0;
  double sigma_numeric_lambda0 = 0;
  double vna_max_hw = 0;
  double vna_max_er = 0;
  /// |z − z0| at which V_na peaks.
  double vna_argmax = 0;
  double overlap_max = 0;
  /// N with ∫_window N cos²α dz = ℓ0.
  double norm_constant = 0;

  double lower() const { return config.z0 - config.window; }
  double upper() const { return config.z0 + config.window; }
  bool inside(double z) const { return z >= lower() && z <= upper(); }

  /// f(z) = N cos²α(z) on the window, zero outside.
  double operator()(double z) const;
  double sin_alpha(double z) const;
  double tan_alpha(double z) const;
};

FocusProfile focusing_function(const FocusConfig& cfg);

/// Numerical maximum of the exact V_na over the window, in ħω; also returns the argmax offset.
double vna_maximum(const FocusConfig& cfg, double* argmax = nullptr);

/// FWHM of cos²α located by bisection on each side of z0 (tolerance 1e-10 ℓ0).
double fwhm_numeric(const FocusConfig& cfg);

/// (ε, β) hitting an analytic FWHM sigma_target (ℓ0) and V_na^max = vna_budget (ħω).
/// An infinite budget selects ε/β = 1.
FocusConfig design_for_targets(double sigma_target, double vna_budget, double k0_l0,
                               double z0 = 0.0);

constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace qscope
