#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qscope/analysis.hpp"
#include "qscope/config.hpp"
#include "qscope/errors.hpp"
#include "qscope/runner.hpp"
#include "qscope/signal.hpp"
#include "qscope/trajectory.hpp"

namespace py = pybind11;
using namespace qscope;

namespace {

DensityOperator as_state(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("density matrix must be square");
  return DensityOperator{m, BasisSpec(static_cast<int>(m.rows()))};
}

// Elementwise fn over a float array, preserving its shape.
template <class Fn>
py::array_t<double> map_array(const py::array_t<double, py::array::forcecast>& x, Fn fn) {
  py::array_t<double> out(x.request().shape);
  auto in = x.unchecked();
  const double* src = x.data();
  double* dst = out.mutable_data();
  for (py::ssize_t i = 0; i < in.size(); ++i) dst[i] = fn(src[i]);
  return out;
}

}  // namespace

PYBIND11_MODULE(_qscope, m) {
  m.doc() = "Quantum trajectory simulator for a subwavelength cavity-QED atom microscope";
  m.attr("__version__") = QSCOPE_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

  py::class_<FocusConfig>(m, "FocusConfig")
      .def(py::init(&FocusConfig::make), py::arg("epsilon"), py::arg("beta"),
           py::arg("k0_l0") = 0.7779866052154991, py::arg("z0") = 0.0)
      .def_readwrite("epsilon", &FocusConfig::epsilon)
      .def_readwrite("beta", &FocusConfig::beta)
      .def_readwrite("k0_l0", &FocusConfig::k0_l0)
      .def_readwrite("z0", &FocusConfig::z0)
      .def_readwrite("window", &FocusConfig::window)
      .def("lambda0", &FocusConfig::lambda0)
      .def("recoil_energy", &FocusConfig::recoil_energy)
      .def("at", &FocusConfig::at, py::arg("z0"))
      .def("validate", &FocusConfig::validate)
      .def("__repr__", [](const FocusConfig& c) {
        return "FocusConfig(epsilon=" + std::to_string(c.epsilon) +
               ", beta=" + std::to_string(c.beta) + ", z0=" + std::to_string(c.z0) + ")";
      });

  py::class_<FocusProfile>(m, "FocusProfile")
      .def_readonly("config", &FocusProfile::config)
      .def_readonly("sigma_analytic_lambda0", &FocusProfile::sigma_analytic_lambda0)
      .def_readonly("sigma_analytic_l0", &FocusProfile::sigma_analytic_l0)
      .def_readonly("sigma_numeric_l0", &FocusProfile::sigma_numeric_l0)
      .def_readonly("sigma_numeric_lambda0", &FocusProfile::sigma_numeric_lambda0)
      .def_readonly("vna_max_hw", &FocusProfile::vna_max_hw)
      .def_readonly("vna_max_er", &FocusProfile::vna_max_er)
      .def_readonly("vna_argmax", &FocusProfile::vna_argmax)
      .def_readonly("overlap_max", &FocusProfile::overlap_max)
      .def_readonly("norm_constant", &FocusProfile::norm_constant)
      .def("__call__", [](const FocusProfile& p, const py::array_t<double, py::array::forcecast>& z) {
        return map_array(z, [&](double v) { return p(v); });
      });

  m.def("focusing_function", &focusing_function, py::arg("config"));
  m.def("design_for_targets", &design_for_targets, py::arg("sigma"), py::arg("vna_budget"),
        py::arg("k0_l0") = 0.7779866052154991, py::arg("z0") = 0.0);
  m.def("k0_l0_from_frequencies", &k0_l0_from_frequencies, py::arg("recoil_freq"),
        py::arg("trap_freq"));
  m.def("resolution_analytic", &resolution_analytic, py::arg("config"));
  m.def("fwhm_numeric", &fwhm_numeric, py::arg("config"));
  m.def("vna_maximum", [](const FocusConfig& c) { return vna_maximum(c); }, py::arg("config"));
  m.def(
      "nonadiabatic_potential",
      [](const FocusConfig& c, const py::array_t<double, py::array::forcecast>& z) {
        return map_array(z, [&](double v) { return nonadiabatic_potential(c, v); });
      },
      py::arg("config"), py::arg("z"));
  m.def(
      "cos2_alpha",
      [](const FocusConfig& c, const py::array_t<double, py::array::forcecast>& z) {
        return map_array(z, [&](double v) { return cos2_alpha(c, v); });
      },
      py::arg("config"), py::arg("z"));

  py::class_<MicroscopeParams>(m, "MicroscopeParams")
      .def(py::init<>())
      .def(py::init([](FocusConfig focus, double gamma, double C, double kappa) {
             MicroscopeParams p;
             p.focus = focus;
             p.gamma = gamma;
             p.cooperativity = C;
             p.kappa_over_omega = kappa;
             return p;
           }),
           py::arg("focus"), py::arg("gamma") = 1.0, py::arg("cooperativity") = kInfinity,
           py::arg("kappa_over_omega") = 0.1)
      .def_readwrite("gamma", &MicroscopeParams::gamma)
      .def_readwrite("cooperativity", &MicroscopeParams::cooperativity)
      .def_readwrite("kappa_over_omega", &MicroscopeParams::kappa_over_omega)
      .def_readwrite("p_ge", &MicroscopeParams::p_ge)
      .def_readwrite("p_re", &MicroscopeParams::p_re)
      .def_readwrite("homodyne_phase", &MicroscopeParams::homodyne_phase)
      .def_readwrite("focus", &MicroscopeParams::focus)
      .def("lsp_rate", &MicroscopeParams::lsp_rate)
      .def("sideband_rate", &MicroscopeParams::sideband_rate, py::arg("l"))
      .def("validate", &MicroscopeParams::validate);

  m.def("f_matrix",
        [](const FocusConfig& c, int dim) {
          return build_f_matrix(focusing_function(c), BasisSpec(dim)).matrix;
        },
        py::arg("config"), py::arg("motional_dim"));
  m.def("eqnd_profile", &eqnd_profile, py::arg("config"), py::arg("z0"), py::arg("n"));
  m.def("ho_density", py::vectorize(&ho_density), py::arg("n"), py::arg("x"));

  m.def("fock_state", [](int dim, int n) { return fock_state(BasisSpec(dim), n).matrix; },
        py::arg("motional_dim"), py::arg("n"));
  m.def("thermal_state", [](int dim, double n) { return thermal_state(BasisSpec(dim), n).matrix; },
        py::arg("motional_dim"), py::arg("n_th"));
  m.def("coherent_state",
        [](int dim, cplx alpha) { return coherent_state(BasisSpec(dim), alpha).matrix; },
        py::arg("motional_dim"), py::arg("alpha"));

  py::enum_<Scheme>(m, "Scheme")
      .value("kraus", Scheme::kraus)
      .value("euler_maruyama", Scheme::euler_maruyama)
      .value("heun", Scheme::heun);
  py::enum_<LossMode>(m, "LossMode").value("jump", LossMode::jump).value("smooth", LossMode::smooth);

  py::class_<IntegratorConfig>(m, "IntegratorConfig")
      .def(py::init<>())
      .def(py::init([](double dt, double t_end, std::uint64_t seed, std::uint64_t stream) {
             IntegratorConfig c;
             c.dt = dt;
             c.t_end = t_end;
             c.seed = seed;
             c.stream = stream;
             return c;
           }),
           py::arg("dt"), py::arg("t_end"), py::arg("seed") = 1, py::arg("stream") = 0)
      .def_readwrite("dt", &IntegratorConfig::dt)
      .def_readwrite("t_end", &IntegratorConfig::t_end)
      .def_readwrite("seed", &IntegratorConfig::seed)
      .def_readwrite("stream", &IntegratorConfig::stream)
      .def_readwrite("snapshot_stride", &IntegratorConfig::snapshot_stride)
      .def_readwrite("record_stride", &IntegratorConfig::record_stride)
      .def_readwrite("scheme", &IntegratorConfig::scheme)
      .def_readwrite("loss_mode", &IntegratorConfig::loss_mode)
      .def_readwrite("store_steps", &IntegratorConfig::store_steps);

  py::class_<ScanProtocol>(m, "ScanProtocol")
      .def(py::init([](double z_start, double z_end, double duration, int repeats) {
             return ScanProtocol{z_start, z_end, duration, repeats};
           }),
           py::arg("z_start") = 4.0, py::arg("z_end") = -4.0, py::arg("duration") = 1000.0,
           py::arg("repeats") = 1)
      .def_readwrite("z_start", &ScanProtocol::z_start)
      .def_readwrite("z_end", &ScanProtocol::z_end)
      .def_readwrite("duration", &ScanProtocol::duration)
      .def_readwrite("repeats", &ScanProtocol::repeats)
      .def("position", &ScanProtocol::position, py::arg("t"));

  py::class_<DynamicsSwitches>(m, "DynamicsSwitches")
      .def(py::init([](bool h, bool sb, bool sp, bool ba) { return DynamicsSwitches{h, sb, sp, ba}; }),
           py::arg("hamiltonian") = true, py::arg("sidebands") = true,
           py::arg("spontaneous_emission") = true, py::arg("measurement_backaction") = true)
      .def_readwrite("hamiltonian", &DynamicsSwitches::hamiltonian)
      .def_readwrite("sidebands", &DynamicsSwitches::sidebands)
      .def_readwrite("spontaneous_emission", &DynamicsSwitches::spontaneous_emission)
      .def_readwrite("measurement_backaction", &DynamicsSwitches::measurement_backaction);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("dt", &Trajectory::dt)
      .def_readonly("levels", &Trajectory::levels)
      .def_readonly("times", &Trajectory::times)
      .def_readonly("survival", &Trajectory::survival)
      .def_readonly("focal_position", &Trajectory::focal_position)
      .def_readonly("dq", &Trajectory::dq)
      .def_readonly("signal", &Trajectory::signal)
      .def_readonly("lost_at", &Trajectory::lost_at)
      .def_readonly("snapshot_times", &Trajectory::snapshot_times)
      .def_readonly("warnings", &Trajectory::warnings)
      .def_property_readonly("populations",
                             [](const Trajectory& t) {
                               Eigen::MatrixXd p(t.records(), t.levels);
                               for (std::size_t r = 0; r < t.records(); ++r)
                                 for (int n = 0; n < t.levels; ++n) p(r, n) = t.population(r, n);
                               return p;
                             })
      .def_property_readonly("snapshots", [](const Trajectory& t) {
        std::vector<Matrix> out;
        for (const auto& s : t.snapshots) out.push_back(s.matrix);
        return out;
      });

  m.def(
      "run_movie_sme",
      [](const Matrix& rho0, const MicroscopeParams& p, const IntegratorConfig& ic,
         DynamicsSwitches sw) {
        DensityOperator r = as_state(rho0);
        ModelOperators ops = assemble_model(focusing_function(p.focus), p, r.basis);
        py::gil_scoped_release release;
        return run_movie_sme(r, ops, p, ic, sw);
      },
      py::arg("rho0"), py::arg("params"), py::arg("integrator"),
      py::arg("switches") = DynamicsSwitches{});
  m.def(
      "run_scan_sme",
      [](const Matrix& rho0, const MicroscopeParams& p, const ScanProtocol& pr,
         const IntegratorConfig& ic, DynamicsSwitches sw) {
        DensityOperator r = as_state(rho0);
        py::gil_scoped_release release;
        return run_scan_sme(r, p, pr, ic, sw);
      },
      py::arg("rho0"), py::arg("params"), py::arg("protocol"), py::arg("integrator"),
      py::arg("switches") = DynamicsSwitches{});
  m.def(
      "run_sre",
      [](const std::vector<double>& p0, const MicroscopeParams& p, const ScanProtocol& pr,
         const IntegratorConfig& ic, DynamicsSwitches sw) {
        py::gil_scoped_release release;
        return run_sre(p0, p, pr, ic, static_cast<int>(p0.size()), sw);
      },
      py::arg("p0"), py::arg("params"), py::arg("protocol"), py::arg("integrator"),
      py::arg("switches") = DynamicsSwitches{});
  m.def(
      "run_full_sme",
      [](const Matrix& rho0, const MicroscopeParams& p, const IntegratorConfig& ic, int cavity_dim,
         DynamicsSwitches sw) {
        DensityOperator r = as_state(rho0);
        BasisSpec joint(r.basis.motional_dim, cavity_dim);
        DensityOperator j = embed_state(r, joint);
        py::gil_scoped_release release;
        return run_full_sme(j, p, ic, sw);
      },
      py::arg("rho0"), py::arg("params"), py::arg("integrator"), py::arg("cavity_dim") = 4,
      py::arg("switches") = DynamicsSwitches{});
  m.def(
      "lindblad_reference",
      [](const Matrix& rho0, const MicroscopeParams& p, double t_end, double dt,
         DynamicsSwitches sw) {
        DensityOperator r = as_state(rho0);
        ModelOperators ops = assemble_model(focusing_function(p.focus), p, r.basis);
        return lindblad_reference(r, ops, p, t_end, dt, sw).matrix;
      },
      py::arg("rho0"), py::arg("params"), py::arg("t_end"), py::arg("dt"),
      py::arg("switches") = DynamicsSwitches{});

  m.def(
      "filter_current",
      [](const std::vector<double>& dq, double dt, double tau) {
        return filter_current(dq, dt, FilterConfig{tau});
      },
      py::arg("dq"), py::arg("dt"), py::arg("tau"));

  py::class_<SnrEstimate>(m, "SnrEstimate")
      .def_readonly("time", &SnrEstimate::time)
      .def_readonly("mean_signal", &SnrEstimate::mean_signal)
      .def_readonly("noise_var", &SnrEstimate::noise_var)
      .def_readonly("snr", &SnrEstimate::snr)
      .def_readonly("snr_stderr", &SnrEstimate::snr_stderr)
      .def_readonly("mean_stderr", &SnrEstimate::mean_stderr)
      .def_readonly("method", &SnrEstimate::method)
      .def_readonly("sample_count", &SnrEstimate::sample_count);
  m.def("snr_from_samples", &snr_from_samples, py::arg("samples"), py::arg("t") = 0.0);
  m.def(
      "snr_cascade",
      [](const MicroscopeParams& p, double tau, double t, const Matrix& rho0, int aux_dim,
         double dt, DynamicsSwitches sw) {
        CascadeOptions o;
        o.motional_dim = static_cast<int>(rho0.rows());
        o.aux_dim = aux_dim;
        o.dt = dt;
        o.rho0 = rho0;
        o.switches = sw;
        py::gil_scoped_release release;
        return snr_cascade(p, FilterConfig{tau}, t, CascadeLayer::reduced, o);
      },
      py::arg("params"), py::arg("tau"), py::arg("t"), py::arg("rho0"), py::arg("aux_dim") = 6,
      py::arg("dt") = 0.002, py::arg("switches") = DynamicsSwitches{});

  py::class_<SnrAnalytic>(m, "SnrAnalytic")
      .def_readonly("shot_noise_limited", &SnrAnalytic::shot_noise_limited)
      .def_readonly("with_loss", &SnrAnalytic::with_loss)
      .def_readonly("loss_probability", &SnrAnalytic::loss_probability);
  m.def("snr_analytic", &snr_analytic, py::arg("n"), py::arg("z0"), py::arg("gamma_T"),
        py::arg("params"), py::arg("sigma"), py::arg("scan_length"), py::arg("motional_dim") = 16,
        py::arg("points") = 129);
  m.def("resolution_limit", &resolution_limit, py::arg("cooperativity"), py::arg("snr_target"),
        py::arg("vna_max_er"), py::arg("l0_over_lambda0"));
  m.def("optimal_gamma_T", &optimal_gamma_T, py::arg("k0_sigma"), py::arg("scan_length"),
        py::arg("cooperativity"), py::arg("vna_max_er"));

  m.def(
      "wigner",
      [](const Matrix& rho, double extent, int points) {
        DensityOperator r = as_state(rho);
        PhaseSpaceGrid g;
        if (extent > 0) {
          g.z_min = g.p_min = -extent;
          g.z_max = g.p_max = extent;
          g.nz = g.np = points;
        } else {
          g = PhaseSpaceGrid::covering(r.basis.motional_dim, points);
        }
        Eigen::VectorXd z(g.nz), p(g.np);
        for (int i = 0; i < g.nz; ++i) z(i) = g.z(i);
        for (int j = 0; j < g.np; ++j) p(j) = g.p(j);
        return py::make_tuple(z, p, wigner(r, g));
      },
      py::arg("rho"), py::arg("extent") = 0.0, py::arg("points") = 121,
      "Returns (z, p, W) with W indexed [z, p].");
  m.def("trace_distance",
        [](const Matrix& a, const Matrix& b) { return trace_distance(as_state(a), as_state(b)); },
        py::arg("a"), py::arg("b"));

  m.def(
      "run_config",
      [](const std::map<std::string, std::string>& values, const std::string& config_file) {
        RunConfig cfg = config_file.empty() ? resolve_config({}, values)
                                            : parse_config_file(config_file, values);
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run(cfg);
        }
        return py::make_tuple(r.outputs, r.warnings);
      },
      py::arg("values"), py::arg("config_file") = "",
      "Resolve a configuration (preset < file < values) and run it like the CLI; returns "
      "(outputs, warnings).");
  m.def("presets", &preset_names);
}
