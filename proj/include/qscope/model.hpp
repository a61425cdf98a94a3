#pragma once

#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "qscope/focus.hpp"
#include "qscope/hilbert.hpp"

namespace qscope {

struct MicroscopeParams {
  /// Measurement rate γ in units of ω.
  double gamma = 1.0;
  /// Cooperativity C; infinity disables spontaneous emission.
  double cooperativity = kInfinity;
  double kappa_over_omega = 0.1;
  double p_ge = 0.0;
  double p_re = 0.0;
  double homodyne_phase = -0.5 * std::numbers::pi;
  FocusConfig focus;

  void validate() const;
  /// γ/4C, zero for C = ∞.
  double lsp_rate() const;
  /// γ / (1 + (2ℓω/κ)²).
  double sideband_rate(int l) const;
};

/// γ = (4AE/ħκ)² from the microscopic drive chain (documentation helper).
double gamma_from_microscopic(double coupling_A, double drive_E, double kappa);

struct ModelOperators {
  BasisSpec basis;  // motional only
  Operator F;
  std::map<int, Operator> sidebands;
  std::vector<std::pair<Operator, double>> lsp_jumps;
  Operator lsp_loss;
  /// Matrix of f² tan²α (the P-independent part of the loss operator).
  Operator f2_tan2;
  /// rates_A(n, ℓ + motional_dim − 1) = A_nℓ.
  Eigen::MatrixXd rates_A;
  Eigen::VectorXd rates_B;
  /// Probability mass of the top retained eigenfunction outside the focus window.
  double window_leakage = 0.0;
  /// Largest negative eigenvalue removed from lsp_loss (0 if none).
  double lsp_clamped = 0.0;

  double rate_A(int n, int l) const { return rates_A(n, l + basis.motional_dim - 1); }
};

struct LspOperators {
  std::vector<std::pair<Operator, double>> jumps;
  Operator loss;
  double clamped = 0.0;
};

Operator build_f_matrix(const FocusProfile& profile, const BasisSpec& basis);
double window_leakage(const FocusProfile& profile, int motional_dim);
std::map<int, Operator> build_sidebands(const Operator& F);
LspOperators build_lsp(const FocusProfile& profile, const MicroscopeParams& params,
                       const BasisSpec& basis);
/// Fills rates_A and rates_B of ops from its F and f2_tan2.
void build_rates(ModelOperators& ops, const MicroscopeParams& params);

struct AssembleOptions {
  bool sidebands = true;
  bool lsp = true;
};

ModelOperators assemble_model(const FocusProfile& profile, const MicroscopeParams& params,
                              const BasisSpec& basis, AssembleOptions opts = {});

/// Operators precomputed on a uniform z0 grid, piecewise constant in between.
struct ScanGrid {
  std::vector<double> z0;
  std::vector<ModelOperators> ops;

  std::size_t index_for(double z) const;
  const ModelOperators& at(double z) const { return ops[index_for(z)]; }
};

ScanGrid build_scan_grid(const MicroscopeParams& params, const BasisSpec& basis, double z_min,
                         double z_max, int points = 256, AssembleOptions opts = {});

}  // namespace qscope
