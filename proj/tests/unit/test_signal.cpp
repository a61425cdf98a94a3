#include "doctest.h"

#include <cmath>

#include "qscope/analysis.hpp"
#include "qscope/ensemble.hpp"
#include "qscope/errors.hpp"
#include "qscope/rng.hpp"
#include "qscope/signal.hpp"

using namespace qscope;

namespace {

const double kK0 = std::sqrt(2.0 * 23.0 / 76.0);

MicroscopeParams static_params(double gamma) {
  MicroscopeParams p;
  p.gamma = gamma;
  p.focus = design_for_targets(0.5, kInfinity, kK0);
  return p;
}

}  // namespace

TEST_CASE("filter response to a constant current") {
  const double dt = 0.01, tau = 0.2, c = 1.7;
  std::vector<double> dq(300, c * dt);
  auto out = filter_current(dq, dt, FilterConfig{tau});
  for (std::size_t k = 0; k < out.size(); k += 37) {
    double expect = c * (1.0 - std::pow(1.0 - dt / tau, static_cast<double>(k + 1)));
    CHECK(out[k] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("filter time must resolve the step") {
  CHECK_THROWS_AS(FilterConfig{0.01}.validate(0.005), ConfigError);
  CHECK_NOTHROW(FilterConfig{0.025}.validate(0.005));
}

TEST_CASE("SNR estimator on known samples") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  SnrEstimate e = snr_from_samples(x, 0.5);
  CHECK(e.mean_signal == doctest::Approx(3.0));
  CHECK(e.noise_var == doctest::Approx(2.5));
  CHECK(e.snr == doctest::Approx(3.6));
  CHECK(e.snr_stderr > 0.0);
  CHECK(e.sample_count == 5);
  CHECK_THROWS(snr_from_samples({1.0}, 0.0));
}

TEST_CASE("jackknife error shrinks with sample size") {
  StreamRng r(1, 0);
  std::vector<double> small, large;
  for (int i = 0; i < 4000; ++i) {
    double v = 1.0 + r.normal();
    if (i < 250) small.push_back(v);
    large.push_back(v);
  }
  SnrEstimate a = snr_from_samples(small, 0), b = snr_from_samples(large, 0);
  CHECK(b.snr_stderr < a.snr_stderr);
  CHECK(b.snr == doctest::Approx(1.0).epsilon(0.15));
  CHECK(b.snr_stderr * std::sqrt(4000.0) == doctest::Approx(a.snr_stderr * std::sqrt(250.0)).epsilon(0.4));
}

TEST_CASE("cascade without measurement gives a zero mean and the shot-noise floor") {
  MicroscopeParams p = static_params(0.0);
  CascadeOptions o;
  o.motional_dim = 6;
  o.aux_dim = 4;
  o.dt = 0.005;
  CascadeResult r = cascade_statistics(p, FilterConfig{0.5}, 3.0, CascadeLayer::reduced, o);
  CHECK(std::abs(r.estimate.mean_signal) < 1e-10);
  // Filtered white noise: Var I_τ → 1/(2τ).
  CHECK(r.estimate.noise_var == doctest::Approx(1.0).epsilon(0.01));
  CHECK(r.trace == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cascade mean equals the filtered Lindblad signal") {
  MicroscopeParams p = static_params(1.0);
  BasisSpec b(8);
  ModelOperators ops = assemble_model(focusing_function(p.focus), p, b);
  DensityOperator r0 = coherent_state(b, cplx(1.0, 0.0));
  const double tau = 0.3, t_end = 2.0, dt = 0.002;
  // Independent route: d⟨I⟩/dt = (⟨2√γ f⟩ − ⟨I⟩)/τ along the unconditional state.
  Generator g = movie_generator(ops, p);
  Matrix rho = r0.matrix;
  double mean = 0.0;
  const int steps = static_cast<int>(std::lround(t_end / dt));
  auto rhs = [&](const Matrix& r, double I) { return (g.signal(r) * r.trace().real() - I) / tau; };
  for (int k = 0; k < steps; ++k) {
    // RK4 for the joint (ρ, ⟨I⟩) system; signal() normalizes, so rescale by the trace.
    Matrix k1 = g.lindblad_rhs(rho);
    double m1 = rhs(rho, mean);
    Matrix r2 = rho + 0.5 * dt * k1;
    Matrix k2 = g.lindblad_rhs(r2);
    double m2 = rhs(r2, mean + 0.5 * dt * m1);
    Matrix r3 = rho + 0.5 * dt * k2;
    Matrix k3 = g.lindblad_rhs(r3);
    double m3 = rhs(r3, mean + 0.5 * dt * m2);
    Matrix r4 = rho + dt * k3;
    Matrix k4 = g.lindblad_rhs(r4);
    double m4 = rhs(r4, mean + dt * m3);
    rho += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    mean += dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
  }
  CascadeOptions o;
  o.motional_dim = 8;
  o.aux_dim = 6;
  o.dt = dt;
  o.rho0 = r0.matrix;
  CascadeResult r = cascade_statistics(p, FilterConfig{tau}, t_end, CascadeLayer::reduced, o);
  CHECK(r.estimate.mean_signal == doctest::Approx(mean).epsilon(2e-3));
  CHECK(r.estimate.method == "cascade");
}

TEST_CASE("full cascade layer agrees with the reduced layer in the bad-cavity limit") {
  MicroscopeParams p = static_params(0.5);
  p.kappa_over_omega = 40.0;
  CascadeOptions o;
  o.motional_dim = 5;
  o.cavity_dim = 3;
  o.aux_dim = 4;
  o.dt = 0.001;
  FilterConfig f{0.4};
  CascadeResult red = cascade_statistics(p, f, 1.0, CascadeLayer::reduced, o);
  CascadeResult full = cascade_statistics(p, f, 1.0, CascadeLayer::full, o);
  CHECK(full.estimate.mean_signal == doctest::Approx(red.estimate.mean_signal).epsilon(0.1));
  CHECK(full.estimate.noise_var == doctest::Approx(red.estimate.noise_var).epsilon(0.05));
}

TEST_CASE("scanned eigenstate SNR matches the frozen-state shot-noise oracle") {
  // |1⟩ with hopping and loss off: the filtered current is the filtered eQND profile plus
  // filtered white noise of variance (1 − e^{−2t/τ})/2τ.
  MicroscopeParams p = static_params(1.0);
  ScanProtocol pr;
  pr.duration = 40.0;
  ScanModel model = build_scan_model(p, pr, BasisSpec(4), {true, false, false, true}, false, 128);
  const double dt = 0.005, t_read = 0.625 * pr.duration, tau = pr.duration * 0.5 / 8.0;
  std::vector<double> z;
  for (double t = 0.5 * dt; t < t_read; t += dt) z.push_back(pr.position(t));
  auto f = eqnd_profile(p.focus, z, 1);
  double mean = 0;
  for (double v : f) mean += (2.0 * v * dt - mean * dt) / tau;
  double var = (1.0 - std::exp(-2.0 * t_read / tau)) / (2.0 * tau);

  IntegratorConfig ic;
  ic.dt = dt;
  ic.t_end = t_read;
  ic.seed = 17;
  ic.record_stride = 1 << 30;
  ic.store_steps = false;
  auto samples = run_ensemble<double>(600, 0, [&](std::size_t i) {
    IntegratorConfig c = ic;
    c.stream = i;
    CurrentFilter filt(tau, dt);
    run_sre({0.0, 1.0, 0.0, 0.0}, model, c, [&](const StepInfo& s) { filt.push(s.dq); });
    return filt.value();
  });
  SnrEstimate e = snr_from_samples(samples, t_read);
  CHECK(std::abs(e.mean_signal - mean) < 3.0 * e.mean_stderr);
  CHECK(std::abs(e.snr - mean * mean / var) < 3.0 * e.snr_stderr);
}
