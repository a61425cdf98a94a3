#include "qscope/hilbert.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qscope/errors.hpp"

namespace qscope {

BasisSpec::BasisSpec(int motional, int cavity, int aux)
    : motional_dim(motional), cavity_dim(cavity), aux_dim(aux) {
  if (motional < 2) {
    throw ConfigError("motional_dim must be >= 2, got " + std::to_string(motional));
  }
  if (cavity < 0 || aux < 0) {
    throw ConfigError("cavity_dim and aux_dim must be >= 0");
  }
}

double DensityOperator::hermiticity_error() const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

double DensityOperator::min_eigenvalue() const {
  Matrix h = 0.5 * (matrix + matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityOperator::validate(double herm_tol, double psd_tol) const {
  if (matrix.rows() != basis.total_dim() || matrix.cols() != basis.total_dim()) {
    throw DimensionError("density matrix does not match its basis");
  }
  if (!matrix.allFinite()) throw NumericalError("density matrix has non-finite entries");
  double herm = hermiticity_error();
  if (herm > herm_tol) {
    std::ostringstream os;
    os << "density matrix not Hermitian (error " << herm << ")";
    throw NumericalError(os.str());
  }
  double lo = min_eigenvalue();
  if (lo < -psd_tol) {
    std::ostringstream os;
    os << "density matrix not positive (min eigenvalue " << lo << ")";
    throw NumericalError(os.str());
  }
  if (trace() > 1.0 + 1e-10) throw NumericalError("density matrix trace exceeds one");
}

Matrix ladder_matrix(int dim) {
  Matrix a = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix embed_motional(const Matrix& m, const BasisSpec& basis) {
  if (m.rows() != basis.motional_dim) throw DimensionError("motional operator size mismatch");
  int rest = basis.cavity_factor() * basis.aux_factor();
  if (rest == 1) return m;
  return kron(m, Matrix::Identity(rest, rest));
}

Matrix embed_cavity(const Matrix& m, const BasisSpec& basis) {
  if (basis.cavity_dim == 0 || m.rows() != basis.cavity_dim)
    throw DimensionError("cavity operator size mismatch");
  Matrix left = Matrix::Identity(basis.motional_dim, basis.motional_dim);
  Matrix right = Matrix::Identity(basis.aux_factor(), basis.aux_factor());
  return kron(kron(left, m), right);
}

Matrix embed_aux(const Matrix& m, const BasisSpec& basis) {
  if (basis.aux_dim == 0 || m.rows() != basis.aux_dim)
    throw DimensionError("aux operator size mismatch");
  int left = basis.motional_dim * basis.cavity_factor();
  return kron(Matrix::Identity(left, left), m);
}

Operator ho_hamiltonian(const BasisSpec& basis) {
  Matrix h = Matrix::Zero(basis.motional_dim, basis.motional_dim);
  for (int n = 0; n < basis.motional_dim; ++n) h(n, n) = n + 0.5;
  return {embed_motional(h, basis), basis, "H_A"};
}

Operator position_operator(const BasisSpec& basis) {
  Matrix a = ladder_matrix(basis.motional_dim);
  Matrix z = (a + a.adjoint()) / std::sqrt(2.0);
  return {embed_motional(z, basis), basis, "z"};
}

Operator momentum_operator(const BasisSpec& basis) {
  Matrix a = ladder_matrix(basis.motional_dim);
  Matrix p = cplx(0.0, 1.0) * (a.adjoint() - a) / std::sqrt(2.0);
  return {embed_motional(p, basis), basis, "p"};
}

Operator motional_annihilation(const BasisSpec& basis) {
  return {embed_motional(ladder_matrix(basis.motional_dim), basis), basis, "a"};
}

Operator cavity_annihilation(const BasisSpec& basis) {
  return {embed_cavity(ladder_matrix(basis.cavity_dim), basis), basis, "c"};
}

Operator aux_annihilation(const BasisSpec& basis) {
  return {embed_aux(ladder_matrix(basis.aux_dim), basis), basis, "c_a"};
}

Operator identity(const BasisSpec& basis) {
  return {Matrix::Identity(basis.total_dim(), basis.total_dim()), basis, "1"};
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

void hermitize(Matrix& m) {
  Matrix t = 0.5 * (m + m.adjoint());
  m = std::move(t);
}

Matrix lindblad_matrix(const Matrix& L, const Matrix& rho) {
  Matrix LdL = L.adjoint() * L;
  Matrix out = L * rho * L.adjoint() - 0.5 * (LdL * rho + rho * LdL);
  hermitize(out);
  return out;
}

Matrix homodyne_matrix(const Matrix& L, const Matrix& rho) {
  double tr = rho.trace().real();
  if (tr <= 1e-12) throw NumericalError("homodyne_apply on a lost (zero-trace) state");
  Matrix Lr = L * rho;
  double expect = 2.0 * Lr.trace().real() / tr;
  Matrix out = Lr + Lr.adjoint() - expect * rho;
  hermitize(out);
  return out;
}

static void check_dims(const Operator& L, const DensityOperator& rho) {
  if (L.matrix.rows() != rho.matrix.rows() || L.matrix.cols() != rho.matrix.cols()) {
    throw DimensionError("operator and density matrix dimensions differ");
  }
}

DensityOperator lindblad_apply(const Operator& L, const DensityOperator& rho) {
  check_dims(L, rho);
  return {lindblad_matrix(L.matrix, rho.matrix), rho.basis};
}

DensityOperator homodyne_apply(const Operator& L, const DensityOperator& rho) {
  check_dims(L, rho);
  return {homodyne_matrix(L.matrix, rho.matrix), rho.basis};
}

double trace_norm(const Matrix& hermitian) {
  Matrix h = 0.5 * (hermitian + hermitian.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  if (a.matrix.rows() != b.matrix.rows()) throw DimensionError("trace_distance size mismatch");
  return 0.5 * trace_norm(a.matrix - b.matrix);
}

DensityOperator fock_state(const BasisSpec& basis, int n) {
  if (n < 0 || n >= basis.motional_dim) throw ConfigError("Fock level outside truncation");
  Matrix m = Matrix::Zero(basis.motional_dim, basis.motional_dim);
  m(n, n) = 1.0;
  return embed_state({m, BasisSpec(basis.motional_dim)}, basis);
}

DensityOperator thermal_state(const BasisSpec& basis, double n_th) {
  if (n_th < 0) throw ConfigError("thermal occupation must be >= 0");
  Matrix m = Matrix::Zero(basis.motional_dim, basis.motional_dim);
  if (n_th == 0) {
    m(0, 0) = 1.0;
  } else {
    double q = n_th / (1.0 + n_th);
    double w = 1.0, sum = 0.0;
    for (int n = 0; n < basis.motional_dim; ++n, w *= q) {
      m(n, n) = w;
      sum += w;
    }
    m /= sum;
  }
  return embed_state({m, BasisSpec(basis.motional_dim)}, basis);
}

DensityOperator coherent_state(const BasisSpec& basis, cplx alpha) {
  Vector psi(basis.motional_dim);
  cplx c = 1.0;
  for (int n = 0; n < basis.motional_dim; ++n) {
    if (n > 0) c *= alpha / std::sqrt(static_cast<double>(n));
    psi(n) = c;
  }
  psi.normalize();
  Matrix m = psi * psi.adjoint();
  return embed_state({m, BasisSpec(basis.motional_dim)}, basis);
}

DensityOperator embed_state(const DensityOperator& motional, const BasisSpec& basis) {
  if (motional.matrix.rows() != basis.motional_dim)
    throw DimensionError("motional state size mismatch");
  if (basis.motional_only()) return {motional.matrix, basis};
  int rest = basis.cavity_factor() * basis.aux_factor();
  Matrix vac = Matrix::Zero(rest, rest);
  vac(0, 0) = 1.0;
  return {kron(motional.matrix, vac), basis};
}

DensityOperator reduce_to_motional(const DensityOperator& rho) {
  const BasisSpec& b = rho.basis;
  int rest = b.cavity_factor() * b.aux_factor();
  if (rest == 1) return {rho.matrix, BasisSpec(b.motional_dim)};
  Matrix m = Matrix::Zero(b.motional_dim, b.motional_dim);
  for (int i = 0; i < b.motional_dim; ++i)
    for (int j = 0; j < b.motional_dim; ++j)
      m(i, j) = rho.matrix.block(i * rest, j * rest, rest, rest).trace();
  return {m, BasisSpec(b.motional_dim)};
}

Matrix reduce_to_aux(const Matrix& rho, const BasisSpec& basis) {
  int na = basis.aux_factor();
  int outer = basis.motional_dim * basis.cavity_factor();
  Matrix m = Matrix::Zero(na, na);
  for (int k = 0; k < outer; ++k) m += rho.block(k * na, k * na, na, na);
  return m;
}

Matrix reduce_to_cavity(const Matrix& rho, const BasisSpec& basis) {
  int nc = basis.cavity_factor();
  int na = basis.aux_factor();
  Matrix m = Matrix::Zero(nc, nc);
  for (int n = 0; n < basis.motional_dim; ++n)
    for (int c = 0; c < nc; ++c)
      for (int d = 0; d < nc; ++d)
        for (int a = 0; a < na; ++a)
          m(c, d) += rho((n * nc + c) * na + a, (n * nc + d) * na + a);
  return m;
}

}  // namespace qscope
