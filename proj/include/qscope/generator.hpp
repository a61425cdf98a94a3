#pragma once

#include <vector>

#include "qscope/hilbert.hpp"

namespace qscope {

enum class Scheme { kraus, euler_maruyama, heun };

/// Single-band operator J = Σ_n c_n |n⟩⟨n+offset| (a sideband of a matrix).
struct BandChannel {
  int offset = 0;
  Vector coeff;  // coeff(n) for the row index n
  double rate = 0.0;
};

struct DenseChannel {
  Matrix op;
  double rate = 0.0;
};

/// Generator of a conditional master equation
///   dρ = −i[H_d + H_x, ρ]dt + Σ r_k D[J_k]ρ dt − (r_loss/2){Λ, ρ}dt
///        + r_m D[M]ρ dt + √r_m H[M]ρ dW,   dq = √r_m⟨M + M†⟩dt + dW,
/// where the diagonal part H_d is applied exactly.
struct Generator {
  RealVector h_diag;  // may be empty
  Matrix h_extra;     // dense Hermitian part (may be empty)
  std::vector<DenseChannel> dense;
  std::vector<BandChannel> bands;
  Matrix loss;  // Λ ≥ 0 (may be empty)
  double loss_rate = 0.0;
  Matrix meas;  // M (may be empty: unmonitored)
  double meas_rate = 0.0;

  /// Non-Hermitian drift K = −iH_x − ½Σ r J†J − ½r_loss Λ − ½r_m M†M. Set by finalize().
  Matrix K;
  int dim = 0;

  void finalize(int dimension);
  bool monitored() const { return meas.size() > 0 && meas_rate > 0; }

  /// Expected current √r_m Tr((M + M†)ρ)/Tr ρ.
  double signal(const Matrix& rho) const;
  /// Loss hazard r_loss Tr(Λρ)/Tr ρ.
  double loss_hazard(const Matrix& rho) const;
  /// ρ ↦ exp(−iH_d dt) ρ exp(iH_d dt).
  void rotate(Matrix& rho, double dt) const;
  /// Deterministic right-hand side without the H_d commutator.
  Matrix drift(const Matrix& rho) const;
  /// Full Lindblad right-hand side including −i[H_d, ρ] (trace-decreasing through Λ).
  Matrix lindblad_rhs(const Matrix& rho) const;
  /// Σ r J ρ J† over the dense and band channels.
  void add_jumps(const Matrix& rho, Matrix& out, double scale) const;

  /// One conditional step on a normalized ρ given the increment dq (after rotation).
  /// Returns the renormalized no-loss state.
  void step(Matrix& rho, double dt, double dq, double dW, Scheme scheme) const;
};

/// Fourth-order Runge–Kutta solution of the unconditional master equation.
Matrix evolve_lindblad(const Generator& gen, const Matrix& rho0, double t_end, double dt);

}  // namespace qscope
