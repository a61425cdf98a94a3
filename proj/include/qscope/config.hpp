#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qscope/hilbert.hpp"
#include "qscope/model.hpp"
#include "qscope/trajectory.hpp"

namespace qscope {

/// Initial motional state spec: "ground", "fock:N", "thermal:NTH", "coherent:ALPHA".
struct InitialState {
  enum class Kind { fock, thermal, coherent } kind = Kind::fock;
  double value = 0.0;

  static InitialState parse(const std::string& text);
  std::string str() const;
  DensityOperator build(const BasisSpec& basis) const;
  /// Populations of the motional levels (diagonal of build()).
  std::vector<double> populations(int motional_dim) const;
};

struct KeySpec {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every accepted configuration key, in documentation order.
const std::vector<KeySpec>& config_keys();
const std::vector<std::string>& preset_names();
std::map<std::string, std::string> preset_values(const std::string& name);

/// `key = value` lines; `#` starts a comment. Unknown keys raise ConfigError.
std::map<std::string, std::string> parse_config_text(const std::string& text);

struct RunConfig {
  std::string subcommand;
  std::string preset;
  MicroscopeParams params;
  IntegratorConfig integrator;
  std::optional<ScanProtocol> protocol;
  int ensemble_size = 1;
  std::string output_dir;
  int threads = 0;
  int motional_dim = 16;
  int cavity_dim = 4;
  int aux_dim = 6;
  InitialState initial;
  /// Design target FWHM in ℓ0 (0 when ε, β were given directly).
  double sigma = 0.0;
  double vna_budget = kInfinity;
  std::vector<double> gamma_list;
  std::vector<double> cooperativity_list;
  double tau = 0.0;        // 0: automatic
  double snr_time = -1.0;  // < 0: automatic
  std::string snr_mode = "ensemble";
  std::string snr_model = "movie";
  std::string cascade_layer = "reduced";
  std::string wigner_of = "state";
  int grid_points = 256;
  int table_points = 401;
  int trajectory_files = 1;

  /// Fully resolved key/value text, one `key = value` per line, sorted by key.
  std::map<std::string, std::string> values;
  std::string resolved_text() const;
};

/// Layering: built-in defaults < preset < file values < flag values.
RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values);
RunConfig parse_config_file(const std::string& path,
                            const std::map<std::string, std::string>& flag_values = {});

/// FNV-1a hash of the resolved configuration text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace qscope
