#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "kanneal/kernel.hpp"
#include "kanneal/potentials.hpp"
#include "kanneal/schedules.hpp"

namespace kanneal {

/// Isotropic Gaussian law of (X_0, Y_0).
struct InitialLaw {
  double x_sigma = 1.0;
  double y_sigma = 1.0;
};

/// Everything that determines an ensemble run. EnsembleResult is a pure
/// function of this (worker count never enters).
struct RunConfig {
  PotentialSpec potential{"quadratic", 1, {}};
  KernelKind kernel = KernelKind::exact_second_order;

  double E = 1.0;                 // cooling energy scale
  double t0 = kDefaultWarmup;     // cooling warm-up time

  double C1 = 1.0;
  double C2 = 1.0;
  CapPolicy cap_policy = CapPolicy::lipschitz;
  std::optional<double> cap_override;

  double horizon = 1000.0;
  std::size_t replicas = 100;
  std::vector<double> checkpoints;  // strictly increasing, in (0, horizon]
  double delta = 0.1;
  std::uint64_t base_seed = 0;
  InitialLaw init;

  std::optional<std::pair<double, double>> rate_window;

  /// Throws UsageError naming the offending field.
  void validate() const;
};

/// Log-spaced times first * 10^(j / per_decade) up to and including horizon.
std::vector<double> log_spaced_checkpoints(double first, double horizon, std::size_t per_decade);

CoolingSchedule cooling_of(const RunConfig& cfg);

/// Step schedule with the configured cap. Throws UsageError when
/// cap_override exceeds the cap of the active policy.
StepSchedule steps_of(const RunConfig& cfg, const Potential& p);

/// Last two decades of the horizon, or the configured window.
std::pair<double, double> rate_window_of(const RunConfig& cfg);

}  // namespace kanneal
