#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>

namespace qscope {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Truncated tensor-product space: motional HO levels ⊗ cavity Fock ⊗ auxiliary Fock.
/// Ordering is motional-major, i.e. index = (n * cav + c) * aux + a.
struct BasisSpec {
  int motional_dim = 2;
  int cavity_dim = 0;
  int aux_dim = 0;

  BasisSpec() = default;
  BasisSpec(int motional, int cavity = 0, int aux = 0);

  int cavity_factor() const { return cavity_dim > 0 ? cavity_dim : 1; }
  int aux_factor() const { return aux_dim > 0 ? aux_dim : 1; }
  int total_dim() const { return motional_dim * cavity_factor() * aux_factor(); }
  bool motional_only() const { return cavity_dim == 0 && aux_dim == 0; }

  bool operator==(const BasisSpec&) const = default;
};

struct Operator {
  Matrix matrix;
  BasisSpec basis;
  std::string label;
};

struct DensityOperator {
  Matrix matrix;
  BasisSpec basis;

  double trace() const { return matrix.trace().real(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;
  /// Throws NumericalError when the invariants (Hermitian, PSD, trace ≤ 1) fail.
  void validate(double herm_tol = 1e-10, double psd_tol = 1e-8) const;
};

// HO-units operators, embedded into the full basis (identity on cavity/aux).
Operator ho_hamiltonian(const BasisSpec& basis);
Operator position_operator(const BasisSpec& basis);
Operator momentum_operator(const BasisSpec& basis);
Operator motional_annihilation(const BasisSpec& basis);
Operator cavity_annihilation(const BasisSpec& basis);
Operator aux_annihilation(const BasisSpec& basis);
Operator identity(const BasisSpec& basis);

/// Lift a motional-only matrix to the full basis.
Matrix embed_motional(const Matrix& m, const BasisSpec& basis);
/// Lift a cavity-only matrix (cavity_dim square) to the full basis.
Matrix embed_cavity(const Matrix& m, const BasisSpec& basis);
Matrix embed_aux(const Matrix& m, const BasisSpec& basis);

Matrix ladder_matrix(int dim);
Matrix kron(const Matrix& a, const Matrix& b);

/// D[L]ρ = LρL† − ½{L†L, ρ}, Hermitian-symmetrized.
DensityOperator lindblad_apply(const Operator& L, const DensityOperator& rho);
/// H[L]ρ = Lρ + ρL† − Tr((L+L†)ρ)/Tr(ρ) ρ. Throws NumericalError for Tr ρ ≤ 1e-12.
DensityOperator homodyne_apply(const Operator& L, const DensityOperator& rho);

Matrix lindblad_matrix(const Matrix& L, const Matrix& rho);
Matrix homodyne_matrix(const Matrix& L, const Matrix& rho);
Matrix commutator(const Matrix& a, const Matrix& b);
void hermitize(Matrix& m);

double trace_norm(const Matrix& hermitian);
double trace_distance(const DensityOperator& a, const DensityOperator& b);

DensityOperator fock_state(const BasisSpec& basis, int n);
DensityOperator thermal_state(const BasisSpec& basis, double n_th);
/// Coherent state |α⟩ truncated and renormalized in the motional factor.
DensityOperator coherent_state(const BasisSpec& basis, cplx alpha);
/// Product with the vacuum of the cavity and aux factors.
DensityOperator embed_state(const DensityOperator& motional, const BasisSpec& basis);
/// Trace out cavity and aux factors.
DensityOperator reduce_to_motional(const DensityOperator& rho);
/// Trace out the motional and cavity factors, leaving aux.
Matrix reduce_to_aux(const Matrix& rho, const BasisSpec& basis);
Matrix reduce_to_cavity(const Matrix& rho, const BasisSpec& basis);

}  // namespace qscope
