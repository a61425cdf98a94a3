#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qscope/model.hpp"
#include "qscope/trajectory.hpp"

namespace qscope {

struct FilterConfig {
  double tau = 1.0;
  /// Throws ConfigError unless tau ≥ 5·dt.
  void validate(double dt) const;
};

/// One-pole low-pass I_τ ← I_τ + (dq − I_τ dt)/τ, I_τ(0) = 0.
class CurrentFilter {
 public:
  CurrentFilter(double tau, double dt) : tau_(tau), dt_(dt) {}
  double push(double dq) {
    value_ += (dq - value_ * dt_) / tau_;
    return value_;
  }
  double value() const { return value_; }

 private:
  double tau_, dt_, value_ = 0.0;
};

std::vector<double> filter_current(const std::vector<double>& dq, double dt,
                                   const FilterConfig& fcfg);
/// Filtered series aligned with the trajectory steps (entry k is I_τ after step k+1).
std::vector<double> filter_current(const Trajectory& traj, const FilterConfig& fcfg);

struct SnrEstimate {
  double time = 0;
  double mean_signal = 0;
  double noise_var = 0;
  double snr = 0;
  /// Jackknife standard error of snr (ensemble only).
  double snr_stderr = 0;
  double mean_stderr = 0;
  std::string method = "ensemble";
  std::size_t sample_count = 0;
};

/// SNR = mean²/variance over independent samples of I_τ(t), with a jackknife error.
SnrEstimate snr_from_samples(const std::vector<double>& samples, double t);
SnrEstimate snr_ensemble(const std::vector<Trajectory>& trajectories, const FilterConfig& fcfg,
                         double t);

enum class CascadeLayer { reduced, full };

struct CascadeOptions {
  int motional_dim = 12;
  int cavity_dim = 4;
  int aux_dim = 6;
  double dt = 0.002;
  /// Motional initial state; ground state when empty.
  Matrix rho0;
  DynamicsSwitches switches;
};

struct CascadeResult {
  SnrEstimate estimate;
  double trace = 1;
  double hermiticity = 0;
  double aux_top_population = 0;
  std::vector<std::string> warnings;
};

/// Filtered-current statistics from the cascade master equation with an auxiliary
/// cavity of decay 2/τ driven by the microscope output (movie dynamics, static focus).
CascadeResult cascade_statistics(const MicroscopeParams& params, const FilterConfig& fcfg,
                                 double t, CascadeLayer mode, const CascadeOptions& opts = {});
SnrEstimate snr_cascade(const MicroscopeParams& params, const FilterConfig& fcfg, double t,
                        CascadeLayer mode, const CascadeOptions& opts = {});

}  // namespace qscope
