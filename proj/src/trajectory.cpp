#include "qscope/trajectory.hpp"

#include <cmath>
#include <sstream>

#include "qscope/errors.hpp"
#include "qscope/rng.hpp"

namespace qscope {

namespace {

constexpr double kGuardTol = 1e-12;

std::string format_guard(const char* what, double value, double limit) {
  std::ostringstream os;
  os << "dt violates the stability guard " << what << " = " << value << " > " << limit;
  return os.str();
}

void check_finite_state(const Matrix& rho) {
  if (!rho.allFinite()) throw NumericalError("NaN detected in conditional state");
}

// Diagonal of the motional reduced state.
void motional_populations(const Matrix& rho, const BasisSpec& basis, double weight,
                          std::vector<double>& out) {
  int rest = basis.cavity_factor() * basis.aux_factor();
  for (int n = 0; n < basis.motional_dim; ++n) {
    double s = 0.0;
    for (int j = 0; j < rest; ++j) s += rho(n * rest + j, n * rest + j).real();
    out.push_back(weight * s);
  }
}

double top_cavity_population(const Matrix& rho, const BasisSpec& basis) {
  if (basis.cavity_dim == 0) return 0.0;
  Matrix rc = reduce_to_cavity(rho, basis);
  return rc(basis.cavity_dim - 1, basis.cavity_dim - 1).real();
}

}  // namespace

void IntegratorConfig::validate(double gamma, double extra_rate) const {
  if (!(dt > 0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_end > 0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive");
  if (gamma * dt > 0.05 + kGuardTol) throw ConfigError(format_guard("gamma*dt", gamma * dt, 0.05));
  if (dt > 0.02 + kGuardTol) throw ConfigError(format_guard("omega*dt", dt, 0.02));
  if (extra_rate * dt > 0.05 + kGuardTol)
    throw ConfigError(format_guard("kappa*dt", extra_rate * dt, 0.05));
  if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
  if (snapshot_stride < 0) throw ConfigError("snapshot_stride must be >= 0");
}

long IntegratorConfig::steps() const {
  return static_cast<long>(std::llround(std::ceil(t_end / dt - 1e-9)));
}

void ScanProtocol::validate() const {
  if (!(duration > 0)) throw ConfigError("scan duration must be positive");
  if (repeats < 1) throw ConfigError("scan repeats must be >= 1");
  if (!std::isfinite(z_start) || !std::isfinite(z_end)) throw ConfigError("scan range not finite");
}

double ScanProtocol::position(double t) const {
  if (t >= total_time()) return z_end;
  if (t <= 0) return z_start;
  double phase = t / duration;
  double frac = phase - std::floor(phase);
  return z_start + (z_end - z_start) * frac;
}

std::vector<double> Trajectory::population_row(std::size_t record) const {
  return {populations.begin() + record * levels, populations.begin() + (record + 1) * levels};
}

Generator movie_generator(const ModelOperators& ops, const MicroscopeParams& params,
                          DynamicsSwitches sw) {
  const int d = ops.basis.motional_dim;
  Generator g;
  if (sw.hamiltonian) {
    g.h_diag.resize(d);
    for (int n = 0; n < d; ++n) g.h_diag(n) = n + 0.5;
  }
  if (sw.measurement_backaction && params.gamma > 0) {
    g.meas = ops.F.matrix;
    g.meas_rate = params.gamma;
  }
  double lsp = params.lsp_rate();
  if (sw.spontaneous_emission && lsp > 0) {
    for (const auto& [op, w] : ops.lsp_jumps) g.dense.push_back({op.matrix, w * lsp});
    g.loss = ops.lsp_loss.matrix;
    g.loss_rate = lsp;
  }
  g.finalize(d);
  return g;
}

Generator scan_generator(const ModelOperators& ops, const MicroscopeParams& params,
                         DynamicsSwitches sw) {
  const int d = ops.basis.motional_dim;
  Generator g;
  if (sw.hamiltonian) {
    g.h_diag.resize(d);
    for (int n = 0; n < d; ++n) g.h_diag(n) = n + 0.5;
  }
  if (sw.measurement_backaction && params.gamma > 0) {
    g.meas = Matrix::Zero(d, d);
    g.meas.diagonal() = ops.F.matrix.diagonal();
    g.meas_rate = params.gamma;
  }
  if (sw.sidebands) {
    for (int l = -(d - 1); l <= d - 1; ++l) {
      if (l == 0) continue;
      double rate = params.sideband_rate(l);
      if (rate <= 0) continue;
      BandChannel b;
      b.offset = l;
      b.rate = rate;
      b.coeff = Vector::Zero(d);
      for (int n = 0; n < d; ++n)
        if (n + l >= 0 && n + l < d) b.coeff(n) = ops.F.matrix(n, n + l);
      g.bands.push_back(std::move(b));
    }
  }
  double lsp = params.lsp_rate();
  if (sw.spontaneous_emission && lsp > 0) {
    for (const auto& [op, w] : ops.lsp_jumps) g.dense.push_back({op.matrix, w * lsp});
    g.loss = ops.lsp_loss.matrix;
    g.loss_rate = lsp;
  }
  g.finalize(d);
  return g;
}

double full_model_coupling(const MicroscopeParams& params) {
  return 0.5 * std::sqrt(params.gamma * params.kappa_over_omega);
}

Generator full_generator(const ModelOperators& ops, const MicroscopeParams& params,
                         const BasisSpec& joint, DynamicsSwitches sw) {
  if (joint.cavity_dim < 3) throw ConfigError("full model needs cavity_dim >= 3");
  if (joint.aux_dim != 0) throw ConfigError("full model basis must not carry an aux factor");
  if (joint.motional_dim != ops.basis.motional_dim)
    throw DimensionError("full model basis and operators disagree on motional_dim");
  const int nc = joint.cavity_dim, D = joint.total_dim();
  Matrix c = ladder_matrix(nc);
  Matrix ic = Matrix::Identity(nc, nc);
  Generator g;
  if (sw.hamiltonian) {
    g.h_diag.resize(D);
    for (int i = 0; i < D; ++i) g.h_diag(i) = i / nc + 0.5;
  }
  double coupling = full_model_coupling(params);
  if (coupling > 0) g.h_extra = coupling * kron(ops.F.matrix, c + c.adjoint());
  double kappa = params.kappa_over_omega;
  cplx phase = std::polar(1.0, -params.homodyne_phase);
  g.meas = phase * kron(Matrix::Identity(joint.motional_dim, joint.motional_dim), c);
  g.meas_rate = sw.measurement_backaction ? kappa : 0.0;
  if (!sw.measurement_backaction) g.dense.push_back({g.meas, kappa});
  double lsp = params.lsp_rate();
  if (sw.spontaneous_emission && lsp > 0) {
    for (const auto& [op, w] : ops.lsp_jumps) g.dense.push_back({kron(op.matrix, ic), w * lsp});
    g.loss = kron(ops.lsp_loss.matrix, ic);
    g.loss_rate = lsp;
  }
  g.finalize(D);
  return g;
}

Trajectory run_conditional(const Matrix& rho0, const BasisSpec& basis,
                           const std::function<const Generator&(double)>& generator_at,
                           const IntegratorConfig& icfg, const StepObserver& observer,
                           const std::function<double(double)>& focal) {
  const long steps = icfg.steps();
  const double dt = icfg.dt;
  StreamRng noise(icfg.seed, icfg.stream, 0);
  StreamRng loss_rng(icfg.seed, icfg.stream, 1);

  Trajectory tr;
  tr.dt = dt;
  tr.levels = basis.motional_dim;
  tr.record_stride = icfg.record_stride;
  tr.seed = icfg.seed;
  tr.stream = icfg.stream;
  if (icfg.store_steps) {
    tr.dq.reserve(steps);
    tr.signal.reserve(steps);
  }

  double survival = rho0.trace().real();
  if (!(survival > 0)) throw ConfigError("initial state has zero trace");
  Matrix rho = rho0 / survival;
  bool lost = false;
  double top_cavity = 0.0;

  auto record = [&](double t) {
    tr.times.push_back(t);
    tr.survival.push_back(survival);
    if (focal) tr.focal_position.push_back(focal(t));
    if (lost) {
      tr.populations.insert(tr.populations.end(), basis.motional_dim, 0.0);
    } else {
      motional_populations(rho, basis, survival, tr.populations);
      if (basis.cavity_dim > 0) top_cavity = std::max(top_cavity, top_cavity_population(rho, basis));
    }
  };
  auto snapshot = [&](double t) {
    tr.snapshot_times.push_back(t);
    Matrix m = lost ? Matrix::Zero(rho.rows(), rho.cols()) : Matrix(survival * rho);
    tr.snapshots.push_back({std::move(m), basis});
  };

  record(0.0);
  if (icfg.snapshot_stride > 0) snapshot(0.0);

  for (long s = 1; s <= steps; ++s) {
    double t0 = (s - 1) * dt, t1 = s * dt;
    double dW = std::sqrt(dt) * noise.normal();
    double signal = 0.0, dq = dW;
    if (!lost) {
      const Generator& g = generator_at(t0);
      g.rotate(rho, dt);
      signal = g.signal(rho);
      dq = signal * dt + dW;
      double p_loss = g.loss_hazard(rho) * dt;
      if (p_loss > 0) {
        if (icfg.loss_mode == LossMode::jump) {
          if (loss_rng.uniform() < p_loss) {
            lost = true;
            survival = 0.0;
            tr.lost_at = t1;
          }
        } else {
          survival *= std::max(0.0, 1.0 - p_loss);
        }
      }
      if (!lost) {
        g.step(rho, dt, dq, dW, icfg.scheme);
        check_finite_state(rho);
      } else {
        rho.setZero();
      }
    }
    if (icfg.store_steps) {
      tr.dq.push_back(dq);
      tr.signal.push_back(signal);
    }
    if (observer) observer({static_cast<std::size_t>(s), t1, dq, signal, survival});
    if (s % icfg.record_stride == 0) record(t1);
    if (icfg.snapshot_stride > 0 && s % icfg.snapshot_stride == 0) snapshot(t1);
  }
  if (basis.cavity_dim > 0 && top_cavity > 1e-4) {
    std::ostringstream os;
    os << "cavity truncation: top Fock population reached " << top_cavity;
    tr.warnings.push_back(os.str());
  }
  return tr;
}

Trajectory run_movie_sme(const DensityOperator& rho0, const ModelOperators& ops,
                         const MicroscopeParams& params, const IntegratorConfig& icfg,
                         DynamicsSwitches switches, const StepObserver& observer) {
  params.validate();
  icfg.validate(params.gamma);
  if (!rho0.basis.motional_only()) throw ConfigError("movie SME takes a motional-only state");
  if (rho0.basis.motional_dim != ops.basis.motional_dim)
    throw DimensionError("state and operators disagree on motional_dim");
  Generator g = movie_generator(ops, params, switches);
  double z0 = params.focus.z0;
  return run_conditional(
      rho0.matrix, rho0.basis, [&](double) -> const Generator& { return g; }, icfg, observer,
      [z0](double) { return z0; });
}

ScanModel build_scan_model(const MicroscopeParams& params, const ScanProtocol& protocol,
                           const BasisSpec& basis, DynamicsSwitches switches,
                           bool with_generators, int grid_points) {
  params.validate();
  protocol.validate();
  ScanModel m;
  m.params = params;
  m.protocol = protocol;
  m.switches = switches;
  MicroscopeParams p = params;
  if (!switches.spontaneous_emission) p.cooperativity = kInfinity;
  AssembleOptions opts;
  opts.sidebands = false;
  opts.lsp = switches.spontaneous_emission && with_generators;
  double lo = std::min(protocol.z_start, protocol.z_end);
  double hi = std::max(protocol.z_start, protocol.z_end);
  int points = lo == hi ? 1 : grid_points;
  m.grid = build_scan_grid(p, BasisSpec(basis.motional_dim), lo, hi, points, opts);
  if (!switches.sidebands) {
    for (auto& ops : m.grid.ops) ops.rates_A.setZero();
  }
  if (with_generators) {
    m.generators.reserve(m.grid.ops.size());
    for (const auto& ops : m.grid.ops) m.generators.push_back(scan_generator(ops, p, switches));
  }
  return m;
}

Trajectory run_scan_sme(const DensityOperator& rho0, const MicroscopeParams& params,
                        const ScanProtocol& protocol, const IntegratorConfig& icfg,
                        DynamicsSwitches switches) {
  ScanModel model = build_scan_model(params, protocol, rho0.basis, switches, true);
  return run_scan_sme(rho0, model, icfg);
}

Trajectory run_scan_sme(const DensityOperator& rho0, const ScanModel& model,
                        const IntegratorConfig& icfg, const StepObserver& observer) {
  icfg.validate(model.params.gamma);
  if (model.generators.empty()) throw ConfigError("scan model was built without SME generators");
  if (!rho0.basis.motional_only()) throw ConfigError("scan SME takes a motional-only state");
  if (rho0.basis.motional_dim != model.grid.ops.front().basis.motional_dim)
    throw DimensionError("state and scan model disagree on motional_dim");
  const ScanProtocol& pr = model.protocol;
  return run_conditional(
      rho0.matrix, rho0.basis,
      [&](double t) -> const Generator& {
        return model.generators[model.grid.index_for(pr.position(t))];
      },
      icfg, observer, [&](double t) { return pr.position(t); });
}

Trajectory run_full_sme(const DensityOperator& rho0_joint, const MicroscopeParams& params,
                        const IntegratorConfig& icfg, DynamicsSwitches switches,
                        const StepObserver& observer) {
  params.validate();
  icfg.validate(params.gamma, params.kappa_over_omega);
  const BasisSpec& joint = rho0_joint.basis;
  ModelOperators ops = assemble_model(focusing_function(params.focus), params,
                                      BasisSpec(joint.motional_dim), {false, true});
  Generator g = full_generator(ops, params, joint, switches);
  double z0 = params.focus.z0;
  return run_conditional(
      rho0_joint.matrix, joint, [&](double) -> const Generator& { return g; }, icfg, observer,
      [z0](double) { return z0; });
}

Trajectory run_sre(const std::vector<double>& p0, const MicroscopeParams& params,
                   const ScanProtocol& protocol, const IntegratorConfig& icfg, int motional_dim,
                   DynamicsSwitches switches) {
  ScanModel model = build_scan_model(params, protocol, BasisSpec(motional_dim), switches, false);
  return run_sre(p0, model, icfg);
}

Trajectory run_sre(const std::vector<double>& p0, const ScanModel& model,
                   const IntegratorConfig& icfg, const StepObserver& observer) {
  const MicroscopeParams& params = model.params;
  icfg.validate(params.gamma);
  const int d = model.grid.ops.front().basis.motional_dim;
  if (static_cast<int>(p0.size()) != d) throw DimensionError("p0 length must equal motional_dim");
  double mass = 0.0;
  for (double v : p0) {
    if (v < 0) throw ConfigError("initial populations must be nonnegative");
    mass += v;
  }
  if (!(mass > 0) || mass > 1 + 1e-9) throw ConfigError("initial populations must sum to (0, 1]");

  const long steps = icfg.steps();
  const double dt = icfg.dt;
  const double sg = std::sqrt(params.gamma);
  const bool hopping = model.switches.sidebands;
  const ScanProtocol& pr = model.protocol;
  StreamRng noise(icfg.seed, icfg.stream, 0);
  StreamRng loss_rng(icfg.seed, icfg.stream, 1);

  Trajectory tr;
  tr.dt = dt;
  tr.levels = d;
  tr.record_stride = icfg.record_stride;
  tr.seed = icfg.seed;
  tr.stream = icfg.stream;
  if (icfg.store_steps) {
    tr.dq.reserve(steps);
    tr.signal.reserve(steps);
  }

  Eigen::VectorXd p(d), f(d), flow(d), next(d);
  for (int n = 0; n < d; ++n) p(n) = p0[n] / mass;
  double survival = mass;
  bool lost = false;

  auto hop = [&](const ModelOperators& ops, const Eigen::VectorXd& q, Eigen::VectorXd& out) {
    out.setZero();
    if (!hopping) return;
    for (int n = 0; n < d; ++n) {
      double acc = 0.0;
      for (int l = -n; l < d - n; ++l) {
        if (l == 0) continue;
        acc += ops.rates_A(n, l + d - 1) * (q(n + l) - q(n));
      }
      out(n) = acc;
    }
  };
  auto drift = [&](const ModelOperators& ops, const Eigen::VectorXd& q, Eigen::VectorXd& out) {
    hop(ops, q, out);
    double bbar = ops.rates_B.dot(q);
    out.array() -= (ops.rates_B.array() - bbar) * q.array();
  };
  auto record = [&](double t) {
    tr.times.push_back(t);
    tr.survival.push_back(survival);
    tr.focal_position.push_back(pr.position(t));
    for (int n = 0; n < d; ++n) tr.populations.push_back(lost ? 0.0 : survival * p(n));
  };
  auto normalize = [&](Eigen::VectorXd& q) {
    double lowest = q.minCoeff();
    if (lowest < -1e-6) {
      std::ostringstream os;
      os << "negative population excursion " << lowest << " (reduce dt)";
      throw NumericalError(os.str());
    }
    q = q.cwiseMax(0.0);
    double s = q.sum();
    if (!(s > 0) || !std::isfinite(s)) throw NumericalError("populations lost their mass");
    q /= s;
  };

  record(0.0);
  for (long s = 1; s <= steps; ++s) {
    double t0 = (s - 1) * dt, t1 = s * dt;
    double dW = std::sqrt(dt) * noise.normal();
    double signal = 0.0, dq = dW;
    if (!lost) {
      const ModelOperators& ops = model.grid.at(pr.position(t0));
      for (int n = 0; n < d; ++n) f(n) = ops.F.matrix(n, n).real();
      double mean = f.dot(p);
      signal = 2.0 * sg * mean;
      dq = signal * dt + dW;
      double p_loss = ops.rates_B.dot(p) * dt;
      if (p_loss > 0) {
        if (icfg.loss_mode == LossMode::jump) {
          if (loss_rng.uniform() < p_loss) {
            lost = true;
            survival = 0.0;
            tr.lost_at = t1;
          }
        } else {
          survival *= std::max(0.0, 1.0 - p_loss);
        }
      }
      if (!lost) {
        switch (icfg.scheme) {
          case Scheme::kraus: {
            for (int n = 0; n < d; ++n) {
              double m = 1.0 - 0.5 * params.gamma * f(n) * f(n) * dt + sg * f(n) * dq;
              next(n) = p(n) * m * m;
            }
            hop(ops, p, flow);
            next += flow * dt;
            next.array() *= (1.0 - ops.rates_B.array() * dt);
            break;
          }
          case Scheme::euler_maruyama: {
            drift(ops, p, flow);
            next = p + flow * dt;
            next.array() += 2.0 * sg * dW * p.array() * (f.array() - mean);
            break;
          }
          case Scheme::heun: {
            drift(ops, p, flow);
            Eigen::VectorXd noise_term = 2.0 * sg * dW * (p.array() * (f.array() - mean)).matrix();
            Eigen::VectorXd pred = p + flow * dt + noise_term;
            Eigen::VectorXd flow2(d);
            drift(ops, pred, flow2);
            next = p + 0.5 * (flow + flow2) * dt + noise_term;
            break;
          }
        }
        normalize(next);
        p.swap(next);
      }
    }
    if (icfg.store_steps) {
      tr.dq.push_back(dq);
      tr.signal.push_back(signal);
    }
    if (observer) observer({static_cast<std::size_t>(s), t1, dq, signal, survival});
    if (s % icfg.record_stride == 0) record(t1);
  }
  return tr;
}

DensityOperator lindblad_reference(const DensityOperator& rho0, const ModelOperators& ops,
                                   const MicroscopeParams& params, double t_end, double dt,
                                   DynamicsSwitches switches) {
  Generator g = movie_generator(ops, params, switches);
  return {evolve_lindblad(g, rho0.matrix, t_end, dt), rho0.basis};
}

}  // namespace qscope
