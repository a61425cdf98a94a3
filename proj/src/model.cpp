#include "qscope/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qscope/errors.hpp"
#include "qscope/quadrature.hpp"

namespace qscope {

namespace {

constexpr int kPanels = 16;
constexpr int kNodesPerPanel = 128;

struct WindowGrid {
  std::vector<double> x;
  std::vector<double> w;
};

WindowGrid window_grid(const FocusProfile& p) {
  WindowGrid g;
  double panel = (p.upper() - p.lower()) / kPanels;
  for (int k = 0; k < kPanels; ++k) {
    double a = p.lower() + k * panel;
    QuadratureRule q = gauss_legendre(kNodesPerPanel, a, a + panel);
    g.x.insert(g.x.end(), q.nodes.begin(), q.nodes.end());
    g.w.insert(g.w.end(), q.weights.begin(), q.weights.end());
  }
  return g;
}

// ∫ ψ_m g(z) ψ_n dz for a weight vector g_k = w_k g(x_k).
Matrix sandwich(const Eigen::MatrixXd& psi, const Eigen::VectorXd& weighted) {
  Eigen::MatrixXd m = psi.transpose() * weighted.asDiagonal() * psi;
  m = 0.5 * (m + m.transpose()).eval();
  return m.cast<cplx>();
}

struct Elements {
  Matrix f, f_sin, f_tan_sin, f2_tan2, f2_tan2_sin2, f2_sin2;
};

Elements quadrature_elements(const FocusProfile& p, int dim, bool lsp) {
  WindowGrid g = window_grid(p);
  Eigen::MatrixXd psi = hermite_table(g.x, dim);
  const Eigen::Index n = static_cast<Eigen::Index>(g.x.size());
  Eigen::VectorXd wf(n), ws(n), wts(n), w2t2(n), w2t2s2(n), w2s2(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double z = g.x[k], f = p(z);
    double alpha = mixing_angle(p.config, z);
    double s = std::sin(alpha), t = p.tan_alpha(z);
    wf(k) = g.w[k] * f;
    ws(k) = g.w[k] * f * s;
    wts(k) = g.w[k] * f * t * s;
    // f² tan²α = N² cos²α sin²α stays bounded even where tan α is large.
    double f2t2 = p.norm_constant * p.norm_constant * std::pow(std::cos(alpha) * s, 2);
    w2t2(k) = g.w[k] * f2t2;
    w2t2s2(k) = g.w[k] * f2t2 * s * s;
    w2s2(k) = g.w[k] * f * f * s * s;
  }
  Elements e;
  e.f = sandwich(psi, wf);
  e.f2_tan2 = sandwich(psi, w2t2);
  if (lsp) {
    e.f_sin = sandwich(psi, ws);
    e.f_tan_sin = sandwich(psi, wts);
    e.f2_tan2_sin2 = sandwich(psi, w2t2s2);
    e.f2_sin2 = sandwich(psi, w2s2);
  }
  return e;
}

std::pair<Matrix, double> clamp_positive(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  double lowest = es.eigenvalues().minCoeff();
  if (lowest >= 0) return {m, 0.0};
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Matrix out = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  return {out, -lowest};
}

LspOperators lsp_from_elements(const Elements& e, const MicroscopeParams& params,
                               const BasisSpec& mb) {
  LspOperators out;
  out.jumps.push_back({Operator{e.f, mb, "f"}, 1.0});
  if (params.p_re > 0) out.jumps.push_back({Operator{e.f_sin, mb, "f sin"}, params.p_re});
  if (params.p_ge > 0) out.jumps.push_back({Operator{e.f_tan_sin, mb, "f tan sin"}, params.p_ge});
  Matrix loss = e.f2_tan2 - params.p_ge * e.f2_tan2_sin2 - params.p_re * e.f2_sin2;
  auto [clamped, removed] = clamp_positive(loss);
  if (removed > 1e-12) {
    std::cerr << "warning: L_sp loss operator had negative eigenvalue " << -removed
              << "; clamped to zero (reduce p_re)\n";
  }
  out.loss = Operator{clamped, mb, "lsp_loss"};
  out.clamped = removed;
  return out;
}

}  // namespace

void MicroscopeParams::validate() const {
  auto fail = [](const std::string& key, double v, const std::string& why) {
    std::ostringstream os;
    os << key << " = " << v << ": " << why;
    throw ConfigError(os.str());
  };
  if (!(gamma >= 0) || !std::isfinite(gamma)) fail("gamma", gamma, "must be finite and >= 0");
  if (!(cooperativity > 0)) fail("cooperativity", cooperativity, "must be > 0 (or inf)");
  if (!(kappa_over_omega > 0)) fail("kappa_over_omega", kappa_over_omega, "must be > 0");
  if (!(p_ge >= 0 && p_ge <= 1)) fail("p_ge", p_ge, "must lie in [0, 1]");
  if (!(p_re >= 0 && p_re <= 1)) fail("p_re", p_re, "must lie in [0, 1]");
  if (p_ge + p_re > 1) fail("p_re", p_re, "p_ge + p_re must not exceed 1");
  focus.validate();
}

double MicroscopeParams::lsp_rate() const {
  return std::isinf(cooperativity) ? 0.0 : gamma / (4.0 * cooperativity);
}

double MicroscopeParams::sideband_rate(int l) const {
  double x = 2.0 * l / kappa_over_omega;
  return gamma / (1.0 + x * x);
}

double gamma_from_microscopic(double coupling_A, double drive_E, double kappa) {
  double g = 4.0 * coupling_A * drive_E / kappa;
  return g * g;
}

Operator build_f_matrix(const FocusProfile& profile, const BasisSpec& basis) {
  Elements e = quadrature_elements(profile, basis.motional_dim, false);
  return {e.f, BasisSpec(basis.motional_dim), "F"};
}

double window_leakage(const FocusProfile& profile, int motional_dim) {
  WindowGrid g = window_grid(profile);
  double inside = 0.0;
  std::vector<double> psi(motional_dim);
  for (size_t k = 0; k < g.x.size(); ++k) {
    hermite_functions(g.x[k], motional_dim, psi.data());
    inside += g.w[k] * psi.back() * psi.back();
  }
  return std::max(0.0, 1.0 - inside);
}

std::map<int, Operator> build_sidebands(const Operator& F) {
  const int d = static_cast<int>(F.matrix.rows());
  std::map<int, Operator> out;
  for (int l = -(d - 1); l <= d - 1; ++l) {
    Matrix m = Matrix::Zero(d, d);
    for (int n = std::max(0, -l); n < d && n + l < d; ++n) m(n, n + l) = F.matrix(n, n + l);
    out.emplace(l, Operator{std::move(m), F.basis, "f^(" + std::to_string(l) + ")"});
  }
  return out;
}

LspOperators build_lsp(const FocusProfile& profile, const MicroscopeParams& params,
                       const BasisSpec& basis) {
  Elements e = quadrature_elements(profile, basis.motional_dim, true);
  return lsp_from_elements(e, params, BasisSpec(basis.motional_dim));
}

void build_rates(ModelOperators& ops, const MicroscopeParams& params) {
  const int d = ops.basis.motional_dim;
  const double lsp = params.lsp_rate();
  ops.rates_A = Eigen::MatrixXd::Zero(d, 2 * d - 1);
  ops.rates_B = Eigen::VectorXd::Zero(d);
  for (int n = 0; n < d; ++n) {
    for (int l = -(d - 1); l <= d - 1; ++l) {
      if (l == 0 || n + l < 0 || n + l >= d) continue;
      double amp = std::norm(ops.F.matrix(n, n + l));
      ops.rates_A(n, l + d - 1) = (params.sideband_rate(l) + lsp) * amp;
    }
    ops.rates_B(n) = lsp * ops.f2_tan2.matrix(n, n).real();
  }
}

ModelOperators assemble_model(const FocusProfile& profile, const MicroscopeParams& params,
                              const BasisSpec& basis, AssembleOptions opts) {
  BasisSpec mb(basis.motional_dim);
  ModelOperators ops;
  ops.basis = mb;
  bool need_lsp = opts.lsp && params.lsp_rate() > 0;
  Elements e = quadrature_elements(profile, basis.motional_dim, need_lsp);
  ops.F = Operator{e.f, mb, "F"};
  ops.f2_tan2 = Operator{e.f2_tan2, mb, "f2tan2"};
  if (opts.sidebands) ops.sidebands = build_sidebands(ops.F);
  if (need_lsp) {
    LspOperators lsp = lsp_from_elements(e, params, mb);
    ops.lsp_jumps = std::move(lsp.jumps);
    ops.lsp_loss = std::move(lsp.loss);
    ops.lsp_clamped = lsp.clamped;
  } else {
    ops.lsp_loss = Operator{Matrix::Zero(mb.motional_dim, mb.motional_dim), mb, "lsp_loss"};
  }
  ops.window_leakage = window_leakage(profile, basis.motional_dim);
  build_rates(ops, params);
  return ops;
}

std::size_t ScanGrid::index_for(double z) const {
  if (z0.size() <= 1) return 0;
  double step = (z0.back() - z0.front()) / static_cast<double>(z0.size() - 1);
  double pos = std::round((z - z0.front()) / step);
  pos = std::clamp(pos, 0.0, static_cast<double>(z0.size() - 1));
  return static_cast<std::size_t>(pos);
}

ScanGrid build_scan_grid(const MicroscopeParams& params, const BasisSpec& basis, double z_min,
                         double z_max, int points, AssembleOptions opts) {
  if (z_min > z_max) std::swap(z_min, z_max);
  if (points < 1 || (points == 1 && z_min != z_max))
    throw ConfigError("scan grid needs at least 2 points for a nonzero range");
  ScanGrid g;
  g.z0.resize(points);
  g.ops.reserve(points);
  for (int i = 0; i < points; ++i) {
    double z = points == 1 ? z_min : z_min + (z_max - z_min) * i / (points - 1);
    g.z0[i] = z;
    FocusProfile p = focusing_function(params.focus.at(z));
    g.ops.push_back(assemble_model(p, params, basis, opts));
  }
  return g;
}

}  // namespace qscope
