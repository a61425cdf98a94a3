#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qscope/hilbert.hpp"
#include "qscope/model.hpp"
#include "qscope/trajectory.hpp"

namespace qscope {

struct PhaseSpaceGrid {
  double z_min = -6, z_max = 6, p_min = -6, p_max = 6;
  int nz = 121, np = 121;

  /// Grid spanning ±(√(2·motional_dim) + margin) in both directions.
  static PhaseSpaceGrid covering(int motional_dim, int points = 121);
  void validate(int motional_dim) const;
  double z(int i) const { return z_min + (z_max - z_min) * i / (nz - 1); }
  double p(int j) const { return p_min + (p_max - p_min) * j / (np - 1); }
};

/// W(z, p) as an nz × np array; rows index z. Throws NumericalError if the grid
/// normalization check fails.
Eigen::MatrixXd wigner(const DensityOperator& rho, const PhaseSpaceGrid& grid,
                       bool check_normalization = true);
/// Position density ⟨z|ρ|z⟩ on the grid's z axis.
std::vector<double> position_density(const DensityOperator& rho, const PhaseSpaceGrid& grid);

/// ⟨n|f^{(0)}_{z0}|n⟩ for each z0 (focus config taken from params, window follows z0).
std::vector<double> eqnd_profile(const FocusConfig& focus, const std::vector<double>& z0, int n);

/// |ψ̃_n(x)|² with the dimensionless HO eigenfunction.
double ho_density(int n, double x);

struct SnrAnalytic {
  double shot_noise_limited = 0;  // 4γT(σ/L)|ψ̃|⁴
  double with_loss = 0;           // divided by (1 + S·B̃T)
  double loss_probability = 0;    // B̃_n T
};

/// σ is the design FWHM in ℓ0, L the scan length in ℓ0. B̃_n is the scan average of B_n(z0)
/// over [−L/2, L/2] built by quadrature on a grid of `points` focal positions.
SnrAnalytic snr_analytic(int n, double z0, double gamma_T, const MicroscopeParams& params,
                         double sigma, double scan_length, int motional_dim = 16,
                         int points = 129);

/// (σ/λ0)_min = [SNR²/C · (E_r/V_na^max) · (ℓ0/λ0)²]^{1/4} with unit prefactor.
double resolution_limit(double cooperativity, double snr_target, double vna_max_er,
                        double l0_over_lambda0);
/// Optimal γT ∼ k0σ(L/ℓ0)√(C V_na^max/E_r).
double optimal_gamma_T(double k0_sigma, double scan_length, double cooperativity,
                       double vna_max_er);

/// Average of the stored snapshots at index `snapshot` (trace-weighted by survival).
DensityOperator ensemble_average_state(const std::vector<Trajectory>& trajectories,
                                       std::size_t snapshot);
/// Trace-norm distance ‖a − b‖₁.
double compare_to_lindblad(const DensityOperator& average, const DensityOperator& reference);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
LinearFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y);
/// Least-squares slope of y = a·x through the origin.
double slope_through_origin(const std::vector<double>& x, const std::vector<double>& y);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qscope
