#include "qscope/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qscope/errors.hpp"

namespace qscope {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + " = '" + text + "': not a number");
  }
}

long to_integer(const std::string& key, const std::string& text) {
  double v = to_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15)
    throw ConfigError(key + " = '" + text + "': not an integer");
  return static_cast<long>(v);
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_number(key, item));
  if (out.empty()) throw ConfigError(key + " is empty");
  return out;
}

const double kPi = 3.141592653589793;

}  // namespace

InitialState InitialState::parse(const std::string& text) {
  std::string t = trim(text);
  InitialState s;
  if (t == "ground") return s;
  auto colon = t.find(':');
  if (colon == std::string::npos)
    throw ConfigError("initial_state = '" + text + "': expected ground, fock:N, thermal:N or coherent:A");
  std::string kind = t.substr(0, colon);
  double v = to_number("initial_state", t.substr(colon + 1));
  if (kind == "fock") {
    if (v < 0 || v != std::floor(v)) throw ConfigError("initial_state fock level must be a nonnegative integer");
    s.kind = Kind::fock;
  } else if (kind == "thermal") {
    if (v < 0) throw ConfigError("initial_state thermal occupation must be >= 0");
    s.kind = Kind::thermal;
  } else if (kind == "coherent") {
    s.kind = Kind::coherent;
  } else {
    throw ConfigError("initial_state kind '" + kind + "' is unknown");
  }
  s.value = v;
  return s;
}

std::string InitialState::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::fock: os << "fock:" << static_cast<int>(value); break;
    case Kind::thermal: os << "thermal:" << value; break;
    case Kind::coherent: os << "coherent:" << value; break;
  }
  return os.str();
}

DensityOperator InitialState::build(const BasisSpec& basis) const {
  switch (kind) {
    case Kind::fock: return fock_state(basis, static_cast<int>(value));
    case Kind::thermal: return thermal_state(basis, value);
    case Kind::coherent: return coherent_state(basis, cplx(value, 0.0));
  }
  return fock_state(basis, 0);
}

std::vector<double> InitialState::populations(int motional_dim) const {
  DensityOperator r = build(BasisSpec(motional_dim));
  std::vector<double> p(motional_dim);
  for (int n = 0; n < motional_dim; ++n) p[n] = r.matrix(n, n).real();
  return p;
}

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"subcommand", "", "focus | movie | scan | full | sre | snr | wigner"},
      {"preset", "", "fig3 | fig6 | fig9 | fig10 | sec5"},
      {"seed", "1", "root seed (u64)"},
      {"ensemble", "1", "number of trajectories"},
      {"threads", "auto", "worker threads (integer or auto)"},
      {"out", "", "output directory (default $QSCOPE_OUT_DIR or ./qscope_out)"},
      {"gamma", "1", "measurement rate gamma/omega; comma list sweeps (movie, snr)"},
      {"cooperativity", "inf", "cooperativity C; comma list sweeps (movie, snr)"},
      {"kappa_over_omega", "0.1", "cavity decay kappa/omega"},
      {"p_ge", "0", "branching ratio P_ge"},
      {"p_re", "0", "branching ratio P_re"},
      {"homodyne_phase", "-1.5707963267948966", "homodyne angle phi (full model)"},
      {"epsilon", "", "Omega_g/Omega_c"},
      {"beta", "", "standing-wave offset"},
      {"sigma", "", "design FWHM in l0 (alternative to epsilon/beta)"},
      {"vna_budget", "inf", "design V_na^max budget in hbar*omega"},
      {"k0_l0", "0.77798660521549912", "k0*l0"},
      {"z0", "0", "static focal point in l0"},
      {"window", "auto", "focus window half-width in l0 (auto: pi/k0)"},
      {"motional_dim", "16", "retained HO levels"},
      {"cavity_dim", "4", "cavity Fock levels (full model, full cascade)"},
      {"aux_dim", "6", "auxiliary filter-cavity levels (cascade)"},
      {"initial_state", "ground", "ground | fock:N | thermal:NTH | coherent:ALPHA"},
      {"dt", "0.005", "time step in 1/omega"},
      {"t_end", "", "duration in 1/omega (scan modes default to repeats*scan_duration)"},
      {"snapshot_stride", "0", "steps between stored density matrices"},
      {"record_stride", "1", "steps between stored population records"},
      {"scheme", "kraus", "kraus | euler_maruyama | heun"},
      {"loss_mode", "jump", "jump | smooth"},
      {"z_start", "4", "scan start in l0"},
      {"z_end", "-4", "scan end in l0"},
      {"scan_duration", "", "scan time T in 1/omega"},
      {"gamma_T", "", "gamma*T (sets scan_duration = gamma_T/gamma)"},
      {"repeats", "1", "consecutive scans"},
      {"grid_points", "256", "focal-position grid for scans"},
      {"tau", "auto", "filter time (auto: sigma/v movie, T*sigma/L scan)"},
      {"snr_time", "auto", "SNR evaluation time (auto: T_osc/4 movie, z0=-1 scan)"},
      {"mode", "ensemble", "snr method: ensemble | cascade"},
      {"snr_model", "movie", "snr dynamics: movie | sre"},
      {"layer", "reduced", "cascade layer: reduced | full"},
      {"wigner_of", "state", "wigner target: state | dissipator"},
      {"table_points", "401", "rows of the focus table"},
      {"trajectory_files", "1", "trajectories written to disk per run"},
  };
  return keys;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"fig3", "fig6", "fig9", "fig10", "sec5"};
  return names;
}

std::map<std::string, std::string> preset_values(const std::string& name) {
  if (name == "fig3") return {{"subcommand", "focus"}, {"epsilon", "0.1"}, {"beta", "0.2"}};
  if (name == "sec5") {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::sqrt(2.0 * 23.0 / 76.0));
    return {{"subcommand", "focus"}, {"epsilon", "0.1"}, {"beta", "0.3"}, {"k0_l0", buf}};
  }
  if (name == "fig6")
    return {{"subcommand", "movie"},      {"sigma", "0.5"},          {"vna_budget", "inf"},
            {"initial_state", "coherent:2"}, {"gamma", "1,2,4"},      {"cooperativity", "3,10,inf"},
            {"ensemble", "200"},          {"t_end", "6.283185307179586"}, {"dt", "0.005"},
            {"z0", "0"},                  {"motional_dim", "16"}};
  if (name == "fig9")
    return {{"subcommand", "sre"},      {"sigma", "0.5"},         {"vna_budget", "inf"},
            {"gamma", "1"},             {"gamma_T", "1000"},      {"cooperativity", "200"},
            {"kappa_over_omega", "0.1"}, {"initial_state", "thermal:1"}, {"repeats", "3"},
            {"z_start", "4"},           {"z_end", "-4"},          {"dt", "0.01"},
            {"record_stride", "10"}};
  if (name == "fig10")
    return {{"subcommand", "snr"},      {"snr_model", "sre"},     {"mode", "ensemble"},
            {"initial_state", "fock:1"}, {"sigma", "0.5"},        {"vna_budget", "0.1"},
            {"kappa_over_omega", "0.1"}, {"cooperativity", "50,100,200,400,800"},
            {"gamma", "1"},             {"gamma_T", "1000"},      {"ensemble", "200"},
            {"dt", "0.01"},             {"z_start", "4"},         {"z_end", "-4"}};
  throw ConfigError("unknown preset '" + name + "'");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::set<std::string> known;
  for (const auto& k : config_keys()) known.insert(k.name);
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (!known.count(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : values) os << k << " = " << v << '\n';
  return os.str();
}

RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values) {
  std::set<std::string> known;
  std::map<std::string, std::string> v;
  for (const auto& k : config_keys()) {
    known.insert(k.name);
    v[k.name] = k.default_value;
  }
  for (const auto* layer : {&file_values, &flag_values})
    for (const auto& [k, val] : *layer)
      if (!known.count(k)) throw ConfigError("unknown key '" + k + "'");

  std::string preset;
  if (auto it = file_values.find("preset"); it != file_values.end()) preset = it->second;
  if (auto it = flag_values.find("preset"); it != flag_values.end()) preset = it->second;
  if (!preset.empty())
    for (const auto& [k, val] : preset_values(preset)) v[k] = val;
  for (const auto* layer : {&file_values, &flag_values})
    for (const auto& [k, val] : *layer) v[k] = val;
  v["preset"] = preset;

  RunConfig cfg;
  cfg.preset = preset;
  cfg.subcommand = v["subcommand"];
  static const std::set<std::string> subcommands = {"focus", "movie", "scan", "full",
                                                    "sre",   "snr",   "wigner"};

  // Missing required keys are collected so an empty config reports all of them.
  std::vector<std::string> missing;
  bool has_design = !v["sigma"].empty();
  bool has_direct = !v["epsilon"].empty() || !v["beta"].empty();
  if (cfg.subcommand.empty()) missing.push_back("subcommand");
  if (!has_design && !has_direct) missing.push_back("epsilon+beta or sigma");
  bool scan_like = cfg.subcommand == "scan" || cfg.subcommand == "sre" ||
                   (cfg.subcommand == "snr" && v["snr_model"] == "sre");
  if ((cfg.subcommand == "movie" || cfg.subcommand == "full") && v["t_end"].empty())
    missing.push_back("t_end");
  if (scan_like && v["scan_duration"].empty() && v["gamma_T"].empty())
    missing.push_back("scan_duration or gamma_T");
  if (!missing.empty()) {
    std::string msg = "missing required keys:";
    for (const auto& m : missing) msg += " " + m + ";";
    throw ConfigError(msg);
  }
  if (!subcommands.count(cfg.subcommand))
    throw ConfigError("subcommand = '" + cfg.subcommand + "' is unknown");
  if (has_design && has_direct)
    throw ConfigError("sigma conflicts with epsilon/beta; give one design route");

  cfg.integrator.seed = static_cast<std::uint64_t>(to_integer("seed", v["seed"]));
  cfg.ensemble_size = static_cast<int>(to_integer("ensemble", v["ensemble"]));
  if (cfg.ensemble_size < 1) throw ConfigError("ensemble must be >= 1");
  if (v["threads"] == "auto") {
    cfg.threads = 0;
  } else {
    cfg.threads = static_cast<int>(to_integer("threads", v["threads"]));
    if (cfg.threads < 1) throw ConfigError("threads must be >= 1 or auto");
  }
  cfg.output_dir = v["out"];
  if (cfg.output_dir.empty()) {
    const char* env = std::getenv("QSCOPE_OUT_DIR");
    cfg.output_dir = env && *env ? env : "qscope_out";
  }

  cfg.gamma_list = to_list("gamma", v["gamma"]);
  cfg.cooperativity_list = to_list("cooperativity", v["cooperativity"]);
  MicroscopeParams& p = cfg.params;
  p.gamma = cfg.gamma_list.front();
  p.cooperativity = cfg.cooperativity_list.front();
  p.kappa_over_omega = to_number("kappa_over_omega", v["kappa_over_omega"]);
  p.p_ge = to_number("p_ge", v["p_ge"]);
  p.p_re = to_number("p_re", v["p_re"]);
  p.homodyne_phase = to_number("homodyne_phase", v["homodyne_phase"]);

  double k0 = to_number("k0_l0", v["k0_l0"]);
  double z0 = to_number("z0", v["z0"]);
  cfg.vna_budget = to_number("vna_budget", v["vna_budget"]);
  if (has_design) {
    cfg.sigma = to_number("sigma", v["sigma"]);
    p.focus = design_for_targets(cfg.sigma, cfg.vna_budget, k0, z0);
  } else {
    if (v["epsilon"].empty() || v["beta"].empty())
      throw ConfigError("epsilon and beta must be given together");
    p.focus = FocusConfig::make(to_number("epsilon", v["epsilon"]), to_number("beta", v["beta"]),
                                k0, z0);
  }
  if (v["window"] != "auto") p.focus.window = to_number("window", v["window"]);
  for (double g : cfg.gamma_list)
    if (!(g >= 0)) throw ConfigError("gamma must be >= 0");
  for (double c : cfg.cooperativity_list)
    if (!(c > 0)) throw ConfigError("cooperativity must be > 0");
  p.validate();

  cfg.motional_dim = static_cast<int>(to_integer("motional_dim", v["motional_dim"]));
  cfg.cavity_dim = static_cast<int>(to_integer("cavity_dim", v["cavity_dim"]));
  cfg.aux_dim = static_cast<int>(to_integer("aux_dim", v["aux_dim"]));
  BasisSpec(cfg.motional_dim, cfg.cavity_dim, cfg.aux_dim);
  cfg.initial = InitialState::parse(v["initial_state"]);
  if (cfg.initial.kind == InitialState::Kind::fock && cfg.initial.value >= cfg.motional_dim)
    throw ConfigError("initial_state fock level exceeds motional_dim");

  IntegratorConfig& ic = cfg.integrator;
  ic.dt = to_number("dt", v["dt"]);
  ic.snapshot_stride = static_cast<int>(to_integer("snapshot_stride", v["snapshot_stride"]));
  ic.record_stride = static_cast<int>(to_integer("record_stride", v["record_stride"]));
  const std::string& scheme = v["scheme"];
  if (scheme == "kraus") ic.scheme = Scheme::kraus;
  else if (scheme == "euler_maruyama") ic.scheme = Scheme::euler_maruyama;
  else if (scheme == "heun" || scheme == "heun_predictor_corrector") ic.scheme = Scheme::heun;
  else throw ConfigError("scheme = '" + scheme + "' is unknown");
  const std::string& lm = v["loss_mode"];
  if (lm == "jump") ic.loss_mode = LossMode::jump;
  else if (lm == "smooth") ic.loss_mode = LossMode::smooth;
  else throw ConfigError("loss_mode = '" + lm + "' is unknown");

  if (scan_like) {
    ScanProtocol pr;
    pr.z_start = to_number("z_start", v["z_start"]);
    pr.z_end = to_number("z_end", v["z_end"]);
    pr.repeats = static_cast<int>(to_integer("repeats", v["repeats"]));
    if (!v["scan_duration"].empty()) {
      pr.duration = to_number("scan_duration", v["scan_duration"]);
    } else {
      if (!(p.gamma > 0)) throw ConfigError("gamma_T needs gamma > 0");
      pr.duration = to_number("gamma_T", v["gamma_T"]) / p.gamma;
    }
    pr.validate();
    cfg.protocol = pr;
    ic.t_end = v["t_end"].empty() ? pr.total_time() : to_number("t_end", v["t_end"]);
  } else if (!v["t_end"].empty()) {
    ic.t_end = to_number("t_end", v["t_end"]);
  } else {
    ic.t_end = 2.0 * kPi;
  }
  double max_gamma = 0;
  for (double g : cfg.gamma_list) max_gamma = std::max(max_gamma, g);
  if (cfg.subcommand != "focus" && cfg.subcommand != "wigner")
    ic.validate(max_gamma, cfg.subcommand == "full" ? p.kappa_over_omega : 0.0);

  cfg.grid_points = static_cast<int>(to_integer("grid_points", v["grid_points"]));
  cfg.table_points = static_cast<int>(to_integer("table_points", v["table_points"]));
  cfg.trajectory_files = static_cast<int>(to_integer("trajectory_files", v["trajectory_files"]));
  if (cfg.grid_points < 2) throw ConfigError("grid_points must be >= 2");
  if (cfg.table_points < 2) throw ConfigError("table_points must be >= 2");
  cfg.tau = v["tau"] == "auto" ? 0.0 : to_number("tau", v["tau"]);
  if (v["tau"] != "auto" && !(cfg.tau > 0)) throw ConfigError("tau must be positive or auto");
  cfg.snr_time = v["snr_time"] == "auto" ? -1.0 : to_number("snr_time", v["snr_time"]);
  cfg.snr_mode = v["mode"];
  if (cfg.snr_mode != "ensemble" && cfg.snr_mode != "cascade")
    throw ConfigError("mode = '" + cfg.snr_mode + "' is unknown");
  cfg.snr_model = v["snr_model"];
  if (cfg.snr_model != "movie" && cfg.snr_model != "sre")
    throw ConfigError("snr_model = '" + cfg.snr_model + "' is unknown");
  cfg.cascade_layer = v["layer"];
  if (cfg.cascade_layer != "reduced" && cfg.cascade_layer != "full")
    throw ConfigError("layer = '" + cfg.cascade_layer + "' is unknown");
  cfg.wigner_of = v["wigner_of"];
  if (cfg.wigner_of != "state" && cfg.wigner_of != "dissipator")
    throw ConfigError("wigner_of = '" + cfg.wigner_of + "' is unknown");

  cfg.values = v;
  return cfg;
}

RunConfig parse_config_file(const std::string& path,
                            const std::map<std::string, std::string>& flag_values) {
  std::map<std::string, std::string> file_values;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    file_values = parse_config_text(ss.str());
  }
  return resolve_config(file_values, flag_values);
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : cfg.resolved_text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qscope
