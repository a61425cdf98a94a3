#include "qscope/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "json.hpp"

#include "qscope/analysis.hpp"
#include "qscope/ensemble.hpp"
#include "qscope/errors.hpp"
#include "qscope/io.hpp"
#include "qscope/signal.hpp"

namespace qscope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Per-trajectory output kept after the worker returns.
struct Sample {
  Trajectory traj;             // populations cleared unless the trajectory is written
  std::vector<double> signal;  // conditional mean current at record times
  std::vector<double> current; // filtered current I_tau at record times
  double current_at = 0;       // I_tau at the SNR evaluation step
  std::vector<double> final_populations;
};

class Outputs {
 public:
  Outputs(const RunConfig& cfg, RunReport& report) : dir_(cfg.output_dir), report_(report) {
    fs::create_directories(dir_);
  }
  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ConfigError("out: cannot write '" + (dir_ / name).string() + "'");
    report_.outputs.push_back(name);
    return f;
  }
  void warn(const std::string& w) {
    if (seen_.insert(w).second) report_.warnings.push_back(w);
  }
  void note_model(const ModelOperators& ops) {
    max_leakage_ = std::max(max_leakage_, ops.window_leakage);
    max_clamp_ = std::max(max_clamp_, ops.lsp_clamped);
  }
  /// Emits the aggregated model diagnostics once per run.
  void flush_notes() {
    if (max_leakage_ > 1e-6)
      warn("top motional level has up to " + format_number(max_leakage_) +
           " of its probability outside the focus window");
    if (max_clamp_ > 0)
      warn("spontaneous-emission loss operator clamped by up to " + format_number(max_clamp_));
  }

 private:
  fs::path dir_;
  RunReport& report_;
  std::set<std::string> seen_;
  double max_leakage_ = 0, max_clamp_ = 0;
};

std::string tag(double gamma, double c) {
  return "g" + format_number(gamma) + "_C" + format_number(c);
}

json base_header(const RunConfig& cfg) {
  const FocusConfig& f = cfg.params.focus;
  return json{{"program", "qscope"},
              {"version", QSCOPE_VERSION},
              {"subcommand", cfg.subcommand},
              {"seed", cfg.integrator.seed},
              {"epsilon", f.epsilon},
              {"beta", f.beta},
              {"k0_l0", f.k0_l0},
              {"units", "hbar = m = omega = l0 = 1"}};
}

/// Runs one conditional trajectory with an online filter sampled at record times.
template <class RunFn>
Sample collect(const IntegratorConfig& icfg, double tau, double snr_time, bool keep, RunFn&& fn) {
  Sample s;
  CurrentFilter filter(tau, icfg.dt);
  const long stride = icfg.record_stride;
  const long snr_step = snr_time >= 0 ? std::lround(snr_time / icfg.dt) : -1;
  s.signal.push_back(0.0);
  s.current.push_back(0.0);
  StepObserver obs = [&](const StepInfo& info) {
    double v = filter.push(info.dq);
    long k = static_cast<long>(info.step);
    if (k == snr_step) s.current_at = v;
    if (k % stride == 0) {
      s.signal.push_back(info.signal);
      s.current.push_back(v);
    }
  };
  IntegratorConfig c = icfg;
  c.store_steps = keep;
  s.traj = fn(c, obs);
  if (s.traj.records() > 0) s.final_populations = s.traj.population_row(s.traj.records() - 1);
  if (!keep) {
    s.traj.populations.clear();
    s.traj.populations.shrink_to_fit();
  }
  return s;
}

void write_samples(Outputs& out, const RunConfig& cfg, const std::vector<Sample>& samples,
                   const std::string& prefix, json header) {
  int files = std::min<int>(cfg.trajectory_files, static_cast<int>(samples.size()));
  for (int i = 0; i < files; ++i) {
    const Sample& s = samples[i];
    header["stream"] = s.traj.stream;
    header["lost_at"] = s.traj.lost_at ? json(*s.traj.lost_at) : json(nullptr);
    header["record_stride"] = s.traj.record_stride;
    header["dt"] = s.traj.dt;
    std::vector<double> filtered;
    if (!s.traj.dq.empty()) filtered = filter_current(s.traj.dq, s.traj.dt, FilterConfig{header["tau"].get<double>()});
    auto f = out.open(prefix + "traj_" + std::to_string(i) + ".tsv");
    write_trajectory(f, s.traj, header, filtered.empty() ? nullptr : &filtered);
  }
  for (const auto& s : samples)
    for (const auto& w : s.traj.warnings) out.warn(w);
}

/// Ensemble mean signal and filtered-current statistics at record times.
void write_mean_current(Outputs& out, const std::vector<Sample>& samples, double dt, int stride,
                        const std::string& name, json header) {
  const std::size_t rows = samples.front().current.size();
  const double m = static_cast<double>(samples.size());
  std::vector<double> t(rows), sig(rows), mean(rows), var(rows), snr(rows), stderr_(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double a = 0, b = 0, b2 = 0;
    for (const auto& s : samples) {
      a += s.signal[r];
      b += s.current[r];
      b2 += s.current[r] * s.current[r];
    }
    t[r] = static_cast<double>(r) * stride * dt;
    sig[r] = a / m;
    mean[r] = b / m;
    var[r] = m > 1 ? (b2 - m * mean[r] * mean[r]) / (m - 1) : 0.0;
    snr[r] = var[r] > 0 ? mean[r] * mean[r] / var[r] : 0.0;
    stderr_[r] = m > 1 ? std::sqrt(std::max(var[r], 0.0) / m) : 0.0;
  }
  header["ensemble_size"] = samples.size();
  auto f = out.open(name);
  write_columns(f, {"time", "mean_signal", "mean_I_tau", "var_I_tau", "stderr_I_tau", "snr"},
                {t, sig, mean, var, stderr_, snr}, header);
}

int steps_for(const IntegratorConfig& ic) { return static_cast<int>(ic.steps()); }

void run_focus(const RunConfig& cfg, Outputs& out) {
  FocusProfile prof = focusing_function(cfg.params.focus);
  std::vector<double> z(cfg.table_points), f(z.size()), v(z.size()), c2(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = prof.lower() + (prof.upper() - prof.lower()) * i / (z.size() - 1);
    f[i] = prof(z[i]);
    v[i] = nonadiabatic_potential(prof.config, z[i]);
    c2[i] = cos2_alpha(prof.config, z[i]);
  }
  json h = base_header(cfg);
  h["window"] = prof.config.window;
  h["z0"] = prof.config.z0;
  auto t = out.open("focus_table.tsv");
  write_columns(t, {"z", "f", "vna_hw", "cos2_alpha"}, {z, f, v, c2}, h);
  json s = base_header(cfg);
  s["window"] = prof.config.window;
  s["lambda0"] = prof.config.lambda0();
  s["sigma_analytic_lambda0"] = prof.sigma_analytic_lambda0;
  s["sigma_analytic_l0"] = prof.sigma_analytic_l0;
  s["sigma_numeric_l0"] = prof.sigma_numeric_l0;
  s["sigma_numeric_lambda0"] = prof.sigma_numeric_lambda0;
  s["vna_max_hw"] = prof.vna_max_hw;
  s["vna_max_er"] = prof.vna_max_er;
  s["vna_argmax"] = prof.vna_argmax;
  s["overlap_max"] = prof.overlap_max;
  s["norm_constant"] = prof.norm_constant;
  auto js = out.open("focus_summary.jsonl");
  write_jsonl(js, s);
}

std::vector<std::pair<double, double>> sweep(const RunConfig& cfg) {
  std::vector<std::pair<double, double>> combos;
  for (double g : cfg.gamma_list)
    for (double c : cfg.cooperativity_list) combos.emplace_back(g, c);
  return combos;
}

void note_model(Outputs& out, const ModelOperators& ops) { out.note_model(ops); }

void run_movie(const RunConfig& cfg, Outputs& out) {
  BasisSpec basis(cfg.motional_dim);
  DensityOperator rho0 = cfg.initial.build(basis);
  double tau = cfg.tau > 0 ? cfg.tau : auto_tau(cfg);
  double t_snr = cfg.snr_time >= 0 ? cfg.snr_time : auto_snr_time(cfg);
  auto js = out.open("summary.jsonl");
  for (auto [g, c] : sweep(cfg)) {
    MicroscopeParams p = cfg.params;
    p.gamma = g;
    p.cooperativity = c;
    ModelOperators ops = assemble_model(focusing_function(p.focus), p, basis);
    note_model(out, ops);
    IntegratorConfig ic = cfg.integrator;
    ic.snapshot_stride = steps_for(ic);
    auto samples = run_ensemble<Sample>(cfg.ensemble_size, cfg.threads, [&](std::size_t i) {
      IntegratorConfig c = ic;
      c.stream = i;
      bool keep = static_cast<int>(i) < cfg.trajectory_files;
      return collect(c, tau, t_snr, keep, [&](const IntegratorConfig& cc, const StepObserver& o) {
        return run_movie_sme(rho0, ops, p, cc, {}, o);
      });
    });
    json h = base_header(cfg);
    h["gamma"] = g;
    h["cooperativity"] = c;
    h["tau"] = tau;
    h["initial_state"] = cfg.initial.str();
    write_samples(out, cfg, samples, tag(g, c) + "_", h);
    write_mean_current(out, samples, ic.dt, ic.record_stride, "mean_current_" + tag(g, c) + ".tsv",
                       h);
    std::vector<double> at;
    for (const auto& s : samples) at.push_back(s.current_at);
    SnrEstimate e = snr_from_samples(at, t_snr);
    json rec = h;
    rec["snr"] = to_json(e);
    std::vector<Trajectory> trajs;
    for (const auto& s : samples) trajs.push_back(s.traj);
    DensityOperator avg = ensemble_average_state(trajs, trajs.front().snapshots.size() - 1);
    DensityOperator ref = lindblad_reference(rho0, ops, p, ic.steps() * ic.dt, ic.dt);
    rec["lindblad_distance"] = compare_to_lindblad(avg, ref);
    rec["ensemble_size"] = samples.size();
    write_jsonl(js, rec);
  }
}

void run_scanlike(const RunConfig& cfg, Outputs& out, bool sre) {
  BasisSpec basis(cfg.motional_dim);
  const ScanProtocol& pr = *cfg.protocol;
  ScanModel model = build_scan_model(cfg.params, pr, basis, {}, !sre, cfg.grid_points);
  for (const auto& ops : model.grid.ops) note_model(out, ops);
  DensityOperator rho0 = cfg.initial.build(basis);
  std::vector<double> p0 = cfg.initial.populations(cfg.motional_dim);
  double tau = cfg.tau > 0 ? cfg.tau : auto_tau(cfg);
  const IntegratorConfig& ic = cfg.integrator;
  auto samples = run_ensemble<Sample>(cfg.ensemble_size, cfg.threads, [&](std::size_t i) {
    IntegratorConfig c = ic;
    c.stream = i;
    bool keep = static_cast<int>(i) < cfg.trajectory_files;
    return collect(c, tau, -1.0, keep, [&](const IntegratorConfig& cc, const StepObserver& o) {
      return sre ? run_sre(p0, model, cc, o) : run_scan_sme(rho0, model, cc, o);
    });
  });
  json h = base_header(cfg);
  h["gamma"] = cfg.params.gamma;
  h["cooperativity"] = cfg.params.cooperativity;
  h["kappa_over_omega"] = cfg.params.kappa_over_omega;
  h["tau"] = tau;
  h["scan"] = {{"z_start", pr.z_start}, {"z_end", pr.z_end}, {"duration", pr.duration},
               {"repeats", pr.repeats}};
  h["initial_state"] = cfg.initial.str();
  write_samples(out, cfg, samples, "", h);
  write_mean_current(out, samples, ic.dt, ic.record_stride, "mean_current.tsv", h);

  auto js = out.open("runs.jsonl");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    json rec{{"stream", i}, {"lost_at", s.traj.lost_at ? json(*s.traj.lost_at) : json(nullptr)},
             {"final_populations", s.final_populations}};
    write_jsonl(js, rec);
  }

  // Reference eQND profiles for the scan range.
  std::vector<double> z(cfg.table_points);
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = pr.z_start + (pr.z_end - pr.z_start) * i / (z.size() - 1);
  std::vector<std::string> names{"z0"};
  std::vector<std::vector<double>> cols{z};
  for (int n = 0; n < std::min(cfg.motional_dim, 4); ++n) {
    names.push_back("f0_" + std::to_string(n));
    cols.push_back(eqnd_profile(cfg.params.focus, z, n));
  }
  auto ef = out.open("eqnd_profile.tsv");
  write_columns(ef, names, cols, base_header(cfg));
}

void run_full(const RunConfig& cfg, Outputs& out) {
  BasisSpec joint(cfg.motional_dim, cfg.cavity_dim);
  DensityOperator rho0 = embed_state(cfg.initial.build(BasisSpec(cfg.motional_dim)), joint);
  double tau = cfg.tau > 0 ? cfg.tau : auto_tau(cfg);
  auto samples = run_ensemble<Sample>(cfg.ensemble_size, cfg.threads, [&](std::size_t i) {
    IntegratorConfig c = cfg.integrator;
    c.stream = i;
    bool keep = static_cast<int>(i) < cfg.trajectory_files;
    return collect(c, tau, -1.0, keep, [&](const IntegratorConfig& cc, const StepObserver& o) {
      return run_full_sme(rho0, cfg.params, cc, {}, o);
    });
  });
  json h = base_header(cfg);
  h["gamma"] = cfg.params.gamma;
  h["cooperativity"] = cfg.params.cooperativity;
  h["kappa_over_omega"] = cfg.params.kappa_over_omega;
  h["coupling_g"] = full_model_coupling(cfg.params);
  h["cavity_dim"] = cfg.cavity_dim;
  h["tau"] = tau;
  write_samples(out, cfg, samples, "", h);
  write_mean_current(out, samples, cfg.integrator.dt, cfg.integrator.record_stride,
                     "mean_current.tsv", h);
  double acc = 0;
  std::size_t count = 0;
  for (const auto& s : samples)
    for (std::size_t r = 1; r < s.signal.size(); ++r) {
      acc += s.signal[r];
      ++count;
    }
  json rec = h;
  rec["time_averaged_signal"] = count ? acc / count : 0.0;
  auto js = out.open("summary.jsonl");
  write_jsonl(js, rec);
}

void run_snr(const RunConfig& cfg, Outputs& out) {
  auto js = out.open("snr.jsonl");
  double tau = cfg.tau > 0 ? cfg.tau : auto_tau(cfg);
  double t_snr = cfg.snr_time >= 0 ? cfg.snr_time : auto_snr_time(cfg);
  FilterConfig fc{tau};
  fc.validate(cfg.integrator.dt);
  BasisSpec basis(cfg.motional_dim);
  for (auto [g, c] : sweep(cfg)) {
    MicroscopeParams p = cfg.params;
    p.gamma = g;
    p.cooperativity = c;
    json rec = base_header(cfg);
    rec["gamma"] = g;
    rec["cooperativity"] = c;
    rec["tau"] = tau;
    rec["model"] = cfg.snr_model;
    rec["initial_state"] = cfg.initial.str();
    SnrEstimate e;
    if (cfg.snr_mode == "cascade") {
      if (cfg.snr_model != "movie") throw ConfigError("mode = cascade requires snr_model = movie");
      CascadeOptions o;
      o.motional_dim = cfg.motional_dim;
      o.cavity_dim = cfg.cavity_dim;
      o.aux_dim = cfg.aux_dim;
      o.dt = cfg.integrator.dt;
      o.rho0 = cfg.initial.build(basis).matrix;
      CascadeResult r = cascade_statistics(p, fc, t_snr,
                                           cfg.cascade_layer == "full" ? CascadeLayer::full
                                                                       : CascadeLayer::reduced,
                                           o);
      for (const auto& w : r.warnings) out.warn(w);
      e = r.estimate;
      rec["layer"] = cfg.cascade_layer;
      rec["trace"] = r.trace;
      rec["aux_top_population"] = r.aux_top_population;
    } else if (cfg.snr_model == "movie") {
      ModelOperators ops = assemble_model(focusing_function(p.focus), p, basis);
      note_model(out, ops);
      DensityOperator rho0 = cfg.initial.build(basis);
      IntegratorConfig ic = cfg.integrator;
      ic.t_end = std::max(ic.t_end, t_snr);
      auto samples = run_ensemble<Sample>(cfg.ensemble_size, cfg.threads, [&](std::size_t i) {
        IntegratorConfig cc = ic;
        cc.stream = i;
        return collect(cc, tau, t_snr, false, [&](const IntegratorConfig& c2, const StepObserver& o) {
          return run_movie_sme(rho0, ops, p, c2, {}, o);
        });
      });
      std::vector<double> at;
      for (const auto& s : samples) at.push_back(s.current_at);
      e = snr_from_samples(at, t_snr);
    } else {
      ScanProtocol pr = *cfg.protocol;
      pr.duration = cfg.protocol->duration * cfg.params.gamma / g;
      ScanModel model = build_scan_model(p, pr, basis, {}, false, cfg.grid_points);
      for (const auto& ops : model.grid.ops) note_model(out, ops);
      std::vector<double> p0 = cfg.initial.populations(cfg.motional_dim);
      IntegratorConfig ic = cfg.integrator;
      double t_here = cfg.snr_time >= 0 ? t_snr : t_snr * pr.duration / cfg.protocol->duration;
      ic.t_end = t_here + 2 * ic.dt;
      double tau_here = cfg.tau > 0 ? tau : tau * pr.duration / cfg.protocol->duration;
      auto samples = run_ensemble<Sample>(cfg.ensemble_size, cfg.threads, [&](std::size_t i) {
        IntegratorConfig cc = ic;
        cc.stream = i;
        cc.record_stride = std::max<int>(1, static_cast<int>(ic.steps()));
        return collect(cc, tau_here, t_here, false,
                       [&](const IntegratorConfig& c2, const StepObserver& o) {
                         return run_sre(p0, model, c2, o);
                       });
      });
      std::vector<double> at;
      for (const auto& s : samples) at.push_back(s.current_at);
      e = snr_from_samples(at, t_here);
      double length = std::abs(pr.z_end - pr.z_start);
      double z0 = pr.position(t_here);
      if (cfg.initial.kind == InitialState::Kind::fock) {
        double sigma = cfg.sigma > 0 ? cfg.sigma : focusing_function(p.focus).sigma_analytic_l0;
        SnrAnalytic a = snr_analytic(static_cast<int>(cfg.initial.value), z0, g * pr.duration, p,
                                     sigma, length, cfg.motional_dim);
        rec["analytic"] = {{"shot_noise_limited", a.shot_noise_limited},
                           {"with_loss", a.with_loss},
                           {"loss_probability", a.loss_probability},
                           {"caveat", "valid for sigma << l0"}};
      }
      rec["z0"] = z0;
      rec["gamma_T"] = g * pr.duration;
    }
    rec["estimate"] = to_json(e);
    write_jsonl(js, rec);
  }
}

void run_wigner(const RunConfig& cfg, Outputs& out) {
  BasisSpec basis(cfg.motional_dim);
  DensityOperator rho = cfg.initial.build(basis);
  bool check = true;
  if (cfg.wigner_of == "dissipator") {
    ModelOperators ops = assemble_model(focusing_function(cfg.params.focus), cfg.params, basis,
                                        {false, false});
    rho.matrix = lindblad_matrix(ops.F.matrix, rho.matrix);
    check = false;
  }
  PhaseSpaceGrid grid = PhaseSpaceGrid::covering(cfg.motional_dim, 121);
  Eigen::MatrixXd W = wigner(rho, grid, check);
  json h = base_header(cfg);
  h["target"] = cfg.wigner_of;
  h["initial_state"] = cfg.initial.str();
  h["rows"] = {{"axis", "z"}, {"min", grid.z_min}, {"max", grid.z_max}, {"count", grid.nz}};
  h["cols"] = {{"axis", "p"}, {"min", grid.p_min}, {"max", grid.p_max}, {"count", grid.np}};
  auto f = out.open("wigner.tsv");
  write_matrix(f, W, h);
  std::vector<double> z(grid.nz), marg(grid.nz);
  double dp = (grid.p_max - grid.p_min) / (grid.np - 1);
  for (int i = 0; i < grid.nz; ++i) {
    z[i] = grid.z(i);
    double acc = 0;
    for (int j = 0; j < grid.np; ++j) acc += W(i, j) * ((j == 0 || j == grid.np - 1) ? 0.5 : 1.0);
    marg[i] = acc * dp;
  }
  auto m = out.open("wigner_marginal.tsv");
  write_columns(m, {"z", "marginal", "position_density"}, {z, marg, position_density(rho, grid)},
                base_header(cfg));
}

void write_manifest(const RunConfig& cfg, const RunReport& report, const std::string& status,
                    const std::string& error) {
  json m{{"program", "qscope"},
         {"version", QSCOPE_VERSION},
         {"subcommand", cfg.subcommand},
         {"preset", cfg.preset},
         {"seed", cfg.integrator.seed},
         {"config_hash", config_hash(cfg)},
         {"wall_time_s", report.wall_seconds},
         {"outputs", report.outputs},
         {"warnings", report.warnings},
         {"status", status},
         {"partial", status != "ok"}};
  if (!error.empty()) m["error"] = error;
  std::ofstream f(fs::path(cfg.output_dir) / "manifest.json", std::ios::binary);
  f << m.dump(2) << '\n';
}

}  // namespace

double auto_tau(const RunConfig& cfg) {
  double sigma = focusing_function(cfg.params.focus).sigma_analytic_l0;
  double tau;
  if (cfg.protocol && (cfg.subcommand != "snr" || cfg.snr_model == "sre")) {
    tau = cfg.protocol->duration * sigma / std::abs(cfg.protocol->z_end - cfg.protocol->z_start);
  } else {
    // Transit time through the focus: σ over the peak speed √2|α| (rms speed otherwise).
    double v = cfg.initial.kind == InitialState::Kind::coherent
                   ? std::sqrt(2.0) * std::abs(cfg.initial.value)
                   : std::sqrt(2.0 * cfg.initial.value + 1.0);
    if (!(v > 0)) v = 1.0;
    tau = sigma / v;
  }
  return std::max(tau, 5.0 * cfg.integrator.dt);
}

double auto_snr_time(const RunConfig& cfg) {
  if (cfg.protocol && (cfg.subcommand != "snr" || cfg.snr_model == "sre")) {
    const ScanProtocol& pr = *cfg.protocol;
    double frac = (pr.z_start - (-1.0)) / (pr.z_start - pr.z_end);
    if (!(frac >= 0 && frac <= 1)) throw ConfigError("snr_time = auto needs z0 = -1 inside the scan");
    return frac * pr.duration;
  }
  return 0.5 * std::numbers::pi;
}

RunReport run(const RunConfig& cfg) {
  RunReport report;
  auto start = std::chrono::steady_clock::now();
  Outputs out(cfg, report);
  {
    auto f = out.open("config.resolved");
    f << cfg.resolved_text();
  }
  try {
    if (cfg.subcommand == "focus") run_focus(cfg, out);
    else if (cfg.subcommand == "movie") run_movie(cfg, out);
    else if (cfg.subcommand == "scan") run_scanlike(cfg, out, false);
    else if (cfg.subcommand == "sre") run_scanlike(cfg, out, true);
    else if (cfg.subcommand == "full") run_full(cfg, out);
    else if (cfg.subcommand == "snr") run_snr(cfg, out);
    else if (cfg.subcommand == "wigner") run_wigner(cfg, out);
    else throw ConfigError("subcommand = '" + cfg.subcommand + "' is unknown");
  } catch (const std::exception& e) {
    out.flush_notes();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(cfg, report, "failed", e.what());
    throw;
  }
  out.flush_notes();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(cfg, report, "ok", "");
  return report;
}

}  // namespace qscope
