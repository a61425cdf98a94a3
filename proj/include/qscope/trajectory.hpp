#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qscope/generator.hpp"
#include "qscope/model.hpp"

namespace qscope {

enum class LossMode { jump, smooth };

struct IntegratorConfig {
  double dt = 0.005;
  double t_end = 1.0;
  std::uint64_t seed = 1;
  /// Trajectory index within an ensemble; selects the random stream.
  std::uint64_t stream = 0;
  /// Steps between stored snapshots (0: none). Snapshots at t = 0 and every stride.
  int snapshot_stride = 0;
  /// Steps between stored population records.
  int record_stride = 1;
  Scheme scheme = Scheme::kraus;
  LossMode loss_mode = LossMode::jump;
  /// Keep the per-step dq and signal arrays (disable for memory-light ensembles).
  bool store_steps = true;

  /// Throws ConfigError when dt breaks the guards γdt ≤ 0.05, ωdt ≤ 0.02 or rate·dt ≤ 0.05.
  void validate(double gamma, double extra_rate = 0.0) const;
  long steps() const;
};

struct ScanProtocol {
  double z_start = 4.0;
  double z_end = -4.0;
  double duration = 1000.0;
  int repeats = 1;

  void validate() const;
  /// Focal position at time t; sawtooth over repeats, held at z_end afterwards.
  double position(double t) const;
  double speed() const { return std::abs(z_end - z_start) / duration; }
  double total_time() const { return duration * repeats; }
};

/// Which parts of the generator are active.
struct DynamicsSwitches {
  bool hamiltonian = true;
  bool sidebands = true;
  bool spontaneous_emission = true;
  bool measurement_backaction = true;
};

struct Trajectory {
  double dt = 0;
  int levels = 0;
  int record_stride = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  /// Record times t_k = k·record_stride·dt, including t = 0.
  std::vector<double> times;
  /// times.size() × levels, row-major.
  std::vector<double> populations;
  std::vector<double> survival;
  std::vector<double> focal_position;
  /// Per step: homodyne increment and conditional mean current (dq = signal·dt + dW).
  std::vector<double> dq;
  std::vector<double> signal;
  std::optional<double> lost_at;
  std::vector<double> snapshot_times;
  /// Snapshots carry trace = survival (the zero matrix after a loss jump).
  std::vector<DensityOperator> snapshots;
  std::vector<std::string> warnings;

  std::size_t records() const { return times.size(); }
  double population(std::size_t record, int n) const {
    return populations[record * levels + n];
  }
  std::vector<double> population_row(std::size_t record) const;
};

struct StepInfo {
  std::size_t step;  // 1-based index of the completed step
  double t;          // time at the end of the step
  double dq;
  double signal;
  double survival;
};

using StepObserver = std::function<void(const StepInfo&)>;

/// Precomputed operators for a scanned focus, shared read-only across trajectories.
struct ScanModel {
  MicroscopeParams params;
  ScanProtocol protocol;
  ScanGrid grid;
  DynamicsSwitches switches;
  /// One SME generator per grid point (empty when built for the SRE only).
  std::vector<Generator> generators;
};

ScanModel build_scan_model(const MicroscopeParams& params, const ScanProtocol& protocol,
                           const BasisSpec& basis, DynamicsSwitches switches = {},
                           bool with_generators = true, int grid_points = 256);

Generator movie_generator(const ModelOperators& ops, const MicroscopeParams& params,
                          DynamicsSwitches switches = {});
Generator scan_generator(const ModelOperators& ops, const MicroscopeParams& params,
                         DynamicsSwitches switches = {});
/// Displaced-frame atom⊗cavity generator with coupling g = √(γκ)/2.
Generator full_generator(const ModelOperators& ops, const MicroscopeParams& params,
                         const BasisSpec& joint, DynamicsSwitches switches = {});
double full_model_coupling(const MicroscopeParams& params);

Trajectory run_movie_sme(const DensityOperator& rho0, const ModelOperators& ops,
                         const MicroscopeParams& params, const IntegratorConfig& icfg,
                         DynamicsSwitches switches = {}, const StepObserver& observer = {});

Trajectory run_scan_sme(const DensityOperator& rho0, const MicroscopeParams& params,
                        const ScanProtocol& protocol, const IntegratorConfig& icfg,
                        DynamicsSwitches switches = {});
Trajectory run_scan_sme(const DensityOperator& rho0, const ScanModel& model,
                        const IntegratorConfig& icfg, const StepObserver& observer = {});

Trajectory run_full_sme(const DensityOperator& rho0_joint, const MicroscopeParams& params,
                        const IntegratorConfig& icfg, DynamicsSwitches switches = {},
                        const StepObserver& observer = {});

Trajectory run_sre(const std::vector<double>& p0, const MicroscopeParams& params,
                   const ScanProtocol& protocol, const IntegratorConfig& icfg,
                   int motional_dim = 16, DynamicsSwitches switches = {});
Trajectory run_sre(const std::vector<double>& p0, const ScanModel& model,
                   const IntegratorConfig& icfg, const StepObserver& observer = {});

/// Generic conditional evolution under a fixed generator (used by the runners above).
Trajectory run_conditional(const Matrix& rho0, const BasisSpec& basis,
                           const std::function<const Generator&(double)>& generator_at,
                           const IntegratorConfig& icfg, const StepObserver& observer = {},
                           const std::function<double(double)>& focal = {});

/// Deterministic unconditional solution for the movie generator (H[·] dropped).
DensityOperator lindblad_reference(const DensityOperator& rho0, const ModelOperators& ops,
                                   const MicroscopeParams& params, double t_end, double dt,
                                   DynamicsSwitches switches = {});

}  // namespace qscope
