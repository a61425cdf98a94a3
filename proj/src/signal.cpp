#include "qscope/signal.hpp"

#include <cmath>
#include <sstream>

#include "qscope/errors.hpp"

namespace qscope {

void FilterConfig::validate(double dt) const {
  if (!(tau > 0)) throw ConfigError("tau must be positive");
  if (tau < 5.0 * dt - 1e-12) {
    std::ostringstream os;
    os << "tau = " << tau << " is shorter than 5*dt = " << 5.0 * dt;
    throw ConfigError(os.str());
  }
}

std::vector<double> filter_current(const std::vector<double>& dq, double dt,
                                   const FilterConfig& fcfg) {
  fcfg.validate(dt);
  CurrentFilter f(fcfg.tau, dt);
  std::vector<double> out;
  out.reserve(dq.size());
  for (double x : dq) out.push_back(f.push(x));
  return out;
}

std::vector<double> filter_current(const Trajectory& traj, const FilterConfig& fcfg) {
  if (traj.dq.empty() && traj.times.size() > 1)
    throw ConfigError("trajectory was recorded without per-step increments");
  return filter_current(traj.dq, traj.dt, fcfg);
}

SnrEstimate snr_from_samples(const std::vector<double>& x, double t) {
  const std::size_t n = x.size();
  if (n < 2) throw ConfigError("SNR needs at least 2 samples");
  double s = 0.0, q = 0.0;
  for (double v : x) {
    s += v;
    q += v * v;
  }
  const double nn = static_cast<double>(n);
  double mean = s / nn;
  double var = (q - nn * mean * mean) / (nn - 1.0);
  SnrEstimate e;
  e.time = t;
  e.mean_signal = mean;
  e.noise_var = var;
  e.snr = var > 0 ? mean * mean / var : 0.0;
  e.mean_stderr = std::sqrt(std::max(var, 0.0) / nn);
  e.sample_count = n;
  e.method = "ensemble";
  if (n >= 3) {
    std::vector<double> loo(n);
    double loo_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = (s - x[i]) / (nn - 1.0);
      double v = (q - x[i] * x[i] - (nn - 1.0) * m * m) / (nn - 2.0);
      loo[i] = v > 0 ? m * m / v : 0.0;
      loo_mean += loo[i];
    }
    loo_mean /= nn;
    double acc = 0.0;
    for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
    e.snr_stderr = std::sqrt((nn - 1.0) / nn * acc);
  }
  return e;
}

SnrEstimate snr_ensemble(const std::vector<Trajectory>& trajectories, const FilterConfig& fcfg,
                         double t) {
  if (trajectories.size() < 2) throw ConfigError("snr_ensemble needs at least 2 trajectories");
  std::vector<double> samples;
  samples.reserve(trajectories.size());
  for (const auto& tr : trajectories) {
    long k = std::lround(t / tr.dt);
    if (k < 1 || k > static_cast<long>(tr.dq.size()))
      throw ConfigError("evaluation time outside the recorded trajectory");
    fcfg.validate(tr.dt);
    CurrentFilter f(fcfg.tau, tr.dt);
    for (long i = 0; i < k; ++i) f.push(tr.dq[i]);
    samples.push_back(f.value());
  }
  return snr_from_samples(samples, t);
}

namespace {

// System generator lifted to system ⊗ aux, plus the aux decay channel.
Generator lift_with_aux(const Generator& g, int na, double aux_rate) {
  Matrix ia = Matrix::Identity(na, na);
  Generator out;
  if (g.h_diag.size() > 0) {
    out.h_diag.resize(g.h_diag.size() * na);
    for (Eigen::Index i = 0; i < g.h_diag.size(); ++i)
      for (int a = 0; a < na; ++a) out.h_diag(i * na + a) = g.h_diag(i);
  }
  if (g.h_extra.size() > 0) out.h_extra = kron(g.h_extra, ia);
  for (const auto& c : g.dense) out.dense.push_back({kron(c.op, ia), c.rate});
  for (const auto& b : g.bands) {
    Matrix m = Matrix::Zero(g.dim, g.dim);
    for (int n = 0; n < b.coeff.size(); ++n)
      if (n + b.offset >= 0 && n + b.offset < g.dim) m(n, n + b.offset) = b.coeff(n);
    out.dense.push_back({kron(m, ia), b.rate});
  }
  if (g.loss.size() > 0) {
    out.loss = kron(g.loss, ia);
    out.loss_rate = g.loss_rate;
  }
  // The monitored channel becomes an ordinary dissipator in the unconditional cascade.
  if (g.monitored()) out.dense.push_back({kron(g.meas, ia), g.meas_rate});
  Matrix is = Matrix::Identity(g.dim, g.dim);
  out.dense.push_back({kron(is, ladder_matrix(na)), aux_rate});
  out.finalize(g.dim * na);
  return out;
}

}  // namespace

CascadeResult cascade_statistics(const MicroscopeParams& params, const FilterConfig& fcfg,
                                 double t, CascadeLayer mode, const CascadeOptions& opts) {
  params.validate();
  fcfg.validate(opts.dt);
  if (opts.aux_dim < 2) throw ConfigError("aux_dim must be >= 2");
  const int nm = opts.motional_dim, na = opts.aux_dim;
  ModelOperators ops = assemble_model(focusing_function(params.focus), params, BasisSpec(nm),
                                      {false, true});
  Matrix rho_m = opts.rho0.size() > 0 ? opts.rho0 : fock_state(BasisSpec(nm), 0).matrix;
  if (rho_m.rows() != nm) throw DimensionError("cascade rho0 does not match motional_dim");

  Generator sys;
  Matrix source;  // S with ⟨S + S†⟩ the mean current
  Matrix rho_sys;
  double guard_rate = params.gamma;
  if (mode == CascadeLayer::reduced) {
    sys = movie_generator(ops, params, opts.switches);
    source = std::sqrt(params.gamma) * ops.F.matrix;
    rho_sys = rho_m;
  } else {
    BasisSpec joint(nm, opts.cavity_dim);
    sys = full_generator(ops, params, joint, opts.switches);
    source = std::sqrt(params.kappa_over_omega) * sys.meas;
    rho_sys = embed_state({rho_m, BasisSpec(nm)}, joint).matrix;
    guard_rate = std::max(guard_rate, params.kappa_over_omega);
  }
  const double aux_rate = 2.0 / fcfg.tau;
  guard_rate = std::max(guard_rate, aux_rate);
  if (guard_rate * opts.dt > 0.05 + 1e-12 || opts.dt > 0.02 + 1e-12)
    throw ConfigError("cascade dt violates the stability guards");

  const int ds = sys.dim;
  Generator gen = lift_with_aux(sys, na, aux_rate);
  Matrix ia = Matrix::Identity(na, na);
  Matrix S = kron(source, ia);
  Matrix ca = kron(Matrix::Identity(ds, ds), ladder_matrix(na));
  Matrix cad = ca.adjoint();
  Matrix Sd = S.adjoint();
  const double g = std::sqrt(aux_rate);

  auto rhs = [&](const Matrix& r) {
    Matrix out = gen.lindblad_rhs(r);
    Matrix Sr = S * r;
    Matrix rSd = r * Sd;
    // −√(2/τ)([c_a†, Sϱ] + [ϱS†, c_a])
    out -= g * (cad * Sr - Sr * cad + rSd * ca - ca * rSd);
    return out;
  };

  Matrix vac = Matrix::Zero(na, na);
  vac(0, 0) = 1.0;
  Matrix rho = kron(rho_sys, vac);
  long steps = static_cast<long>(std::ceil(t / opts.dt - 1e-9));
  double h = steps > 0 ? t / steps : 0.0;
  for (long s = 0; s < steps; ++s) {
    Matrix k1 = rhs(rho);
    Matrix k2 = rhs(rho + 0.5 * h * k1);
    Matrix k3 = rhs(rho + 0.5 * h * k2);
    Matrix k4 = rhs(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!rho.allFinite()) throw NumericalError("cascade evolution produced NaN");
  }

  CascadeResult res;
  res.trace = rho.trace().real();
  res.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  hermitize(rho);
  BasisSpec lifted(ds, 0, na);
  Matrix raux = reduce_to_aux(rho, lifted) / res.trace;
  Matrix a = ladder_matrix(na);
  Matrix x = a + a.adjoint();
  double mx = (x * raux).trace().real();
  double mx2 = (x * x * raux).trace().real();
  res.aux_top_population = raux(na - 1, na - 1).real();
  if (res.aux_top_population > 1e-4) {
    std::ostringstream os;
    os << "aux truncation: top Fock population " << res.aux_top_population;
    res.warnings.push_back(os.str());
  }
  SnrEstimate& e = res.estimate;
  e.time = t;
  e.mean_signal = -mx / std::sqrt(2.0 * fcfg.tau);
  e.noise_var = (mx2 - mx * mx) / (2.0 * fcfg.tau);
  e.snr = e.noise_var > 0 ? e.mean_signal * e.mean_signal / e.noise_var : 0.0;
  e.method = "cascade";
  e.sample_count = 0;
  return res;
}

SnrEstimate snr_cascade(const MicroscopeParams& params, const FilterConfig& fcfg, double t,
                        CascadeLayer mode, const CascadeOptions& opts) {
  return cascade_statistics(params, fcfg, t, mode, opts).estimate;
}

}  // namespace qscope
