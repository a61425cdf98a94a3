#include "qscope/generator.hpp"

#include <cmath>

#include "qscope/errors.hpp"

namespace qscope {

void Generator::finalize(int dimension) {
  dim = dimension;
  K = Matrix::Zero(dim, dim);
  if (h_extra.size() > 0) K += cplx(0.0, -1.0) * h_extra;
  for (const auto& c : dense) {
    if (c.rate > 0) K -= 0.5 * c.rate * (c.op.adjoint() * c.op);
  }
  for (const auto& b : bands) {
    for (int n = 0; n < b.coeff.size(); ++n) {
      int col = n + b.offset;
      if (col < 0 || col >= dim) continue;
      K(col, col) -= 0.5 * b.rate * std::norm(b.coeff(n));
    }
  }
  if (loss.size() > 0 && loss_rate > 0) K -= 0.5 * loss_rate * loss;
  if (monitored()) K -= 0.5 * meas_rate * (meas.adjoint() * meas);
}

double Generator::signal(const Matrix& rho) const {
  if (!monitored()) return 0.0;
  double tr = rho.trace().real();
  if (tr <= 0) return 0.0;
  return 2.0 * std::sqrt(meas_rate) * (meas * rho).trace().real() / tr;
}

double Generator::loss_hazard(const Matrix& rho) const {
  if (loss.size() == 0 || loss_rate <= 0) return 0.0;
  double tr = rho.trace().real();
  if (tr <= 0) return 0.0;
  return loss_rate * (loss * rho).trace().real() / tr;
}

void Generator::rotate(Matrix& rho, double dt) const {
  if (h_diag.size() == 0) return;
  Vector u(dim);
  for (int m = 0; m < dim; ++m) u(m) = std::polar(1.0, -h_diag(m) * dt);
  for (int k = 0; k < dim; ++k)
    for (int m = 0; m < dim; ++m) rho(m, k) *= u(m) * std::conj(u(k));
}

void Generator::add_jumps(const Matrix& rho, Matrix& out, double scale) const {
  for (const auto& c : dense) {
    if (c.rate <= 0) continue;
    out.noalias() += (scale * c.rate) * (c.op * rho * c.op.adjoint());
  }
  for (const auto& b : bands) {
    if (b.rate <= 0) continue;
    const int o = b.offset;
    const double r = scale * b.rate;
    for (int k = 0; k < dim; ++k) {
      int kk = k + o;
      if (kk < 0 || kk >= dim || k >= b.coeff.size()) continue;
      cplx ck = std::conj(b.coeff(k));
      for (int m = 0; m < dim; ++m) {
        int mm = m + o;
        if (mm < 0 || mm >= dim || m >= b.coeff.size()) continue;
        out(m, k) += r * b.coeff(m) * rho(mm, kk) * ck;
      }
    }
  }
}

Matrix Generator::drift(const Matrix& rho) const {
  Matrix kr = K * rho;
  Matrix out = kr + kr.adjoint();
  add_jumps(rho, out, 1.0);
  if (monitored()) out.noalias() += meas_rate * (meas * rho * meas.adjoint());
  return out;
}

Matrix Generator::lindblad_rhs(const Matrix& rho) const {
  Matrix out = drift(rho);
  if (h_diag.size() > 0) {
    for (int k = 0; k < dim; ++k)
      for (int m = 0; m < dim; ++m) out(m, k) += cplx(0.0, -1.0) * (h_diag(m) - h_diag(k)) * rho(m, k);
  }
  return out;
}

namespace {

void renormalize(Matrix& rho) {
  double tr = rho.trace().real();
  if (!(tr > 0) || !std::isfinite(tr)) throw NumericalError("conditional state lost its trace");
  rho /= tr;
  hermitize(rho);
}

}  // namespace

void Generator::step(Matrix& rho, double dt, double dq, double dW, Scheme scheme) const {
  switch (scheme) {
    case Scheme::kraus: {
      Matrix A = K * dt;
      A.diagonal().array() += 1.0;
      if (monitored()) A += (std::sqrt(meas_rate) * dq) * meas;
      Matrix next = A * rho * A.adjoint();
      add_jumps(rho, next, dt);
      rho = std::move(next);
      break;
    }
    case Scheme::euler_maruyama: {
      Matrix next = rho + drift(rho) * dt;
      if (monitored()) next += (std::sqrt(meas_rate) * dW) * homodyne_matrix(meas, rho);
      rho = std::move(next);
      break;
    }
    case Scheme::heun: {
      Matrix d0 = drift(rho);
      Matrix noise = Matrix::Zero(dim, dim);
      if (monitored()) noise = (std::sqrt(meas_rate) * dW) * homodyne_matrix(meas, rho);
      Matrix pred = rho + d0 * dt + noise;
      Matrix next = rho + 0.5 * (d0 + drift(pred)) * dt + noise;
      rho = std::move(next);
      break;
    }
  }
  if (!rho.allFinite()) throw NumericalError("non-finite density matrix during integration");
  renormalize(rho);
}

Matrix evolve_lindblad(const Generator& gen, const Matrix& rho0, double t_end, double dt) {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  if (steps <= 0) return rho0;
  double h = t_end / steps;
  Matrix rho = rho0;
  for (long s = 0; s < steps; ++s) {
    Matrix k1 = gen.lindblad_rhs(rho);
    Matrix k2 = gen.lindblad_rhs(rho + 0.5 * h * k1);
    Matrix k3 = gen.lindblad_rhs(rho + 0.5 * h * k2);
    Matrix k4 = gen.lindblad_rhs(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    hermitize(rho);
  }
  return rho;
}

}  // namespace qscope
