#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kanneal/errors.hpp"
#include "kanneal/run_config.hpp"

namespace kanneal {

struct CheckpointRecord {
  double T = 0.0;         // clock of the recorded state (first with T >= checkpoint)
  double U = 0.0;
  double speed_sq = 0.0;  // |y|^2, 0 for the overdamped kernel
  double R = 0.0;         // lyapunov_R with beta = beta_tilde(r)
};

struct Trajectory {
  std::vector<CheckpointRecord> checkpoints;
};

/// A replica produced a non-finite state.
class DivergedError : public NumericalError {
 public:
  DivergedError(const std::string& what, std::uint64_t replica, std::uint64_t k, double T);

  std::uint64_t replica() const noexcept { return replica_; }
  std::uint64_t step() const noexcept { return k_; }
  double time() const noexcept { return T_; }

 private:
  std::uint64_t replica_;
  std::uint64_t k_;
  double T_;
};

/// Runs replica `index` of `cfg` until T >= cfg.horizon. The initial law is
/// drawn from the replica's own stream: all x coordinates, then all y.
/// Throws DivergedError on a non-finite state.
Trajectory run_replica(const RunConfig& cfg, const Potential& p, std::uint64_t index);
Trajectory run_replica(const RunConfig& cfg, std::uint64_t index);

// --- ensembles ----------------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for `successes` out of `n` trials.
Interval wilson_interval(std::size_t successes, std::size_t n, double z = kZ95);

struct CheckpointStats {
  double T = 0.0;  // requested checkpoint time
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double mean_U = 0.0;
  double mean_speed_sq = 0.0;
  double mean_R = 0.0;
};

struct DivergenceRecord {
  std::uint64_t replica = 0;
  std::uint64_t k = 0;
  double T = 0.0;
  std::string message;
};

struct EnsembleResult {
  std::uint64_t config_hash = 0;
  std::size_t replicas = 0;  // requested
  std::size_t used = 0;      // replicas entering the statistics
  std::vector<CheckpointStats> checkpoints;
  std::vector<DivergenceRecord> divergences;
  double delta = 0.0;
  double E = 0.0;
  std::optional<double> e_star;
  std::string e_star_source;
};

/// More than the tolerated share of replicas diverged.
class EnsembleFailedError : public std::runtime_error {
 public:
  EnsembleFailedError(const std::string& what, std::vector<DivergenceRecord> divergences);
  const std::vector<DivergenceRecord>& divergences() const noexcept { return divergences_; }

 private:
  std::vector<DivergenceRecord> divergences_;
};

struct EnsembleOptions {
  unsigned threads = 1;  // scheduling only; results never depend on it
};

/// Critical depth used for reporting: the potential's own declared value when
/// it has one, otherwise the grid computation for dims <= 2. The second
/// member names the source ("declared", "landscape" or "unavailable").
std::pair<std::optional<double>, std::string> resolve_e_star(const Potential& p);

/// Replicas are distributed over `threads` workers and folded in index order.
/// Diverged replicas are dropped when they are fewer than 1% of the ensemble;
/// otherwise EnsembleFailedError is thrown.
EnsembleResult run_ensemble(const RunConfig& cfg, const EnsembleOptions& opts = {});
EnsembleResult run_ensemble(const RunConfig& cfg, PotentialPtr p, const EnsembleOptions& opts = {});

/// checkpoint_T,p_hat,ci_lo,ci_hi,mean_U,mean_speed_sq,mean_R with 17
/// significant digits and LF line endings.
std::string ensemble_csv(const EnsembleResult& res);

// --- rates --------------------------------------------------------------------

/// min(delta / E, (1 - E_star / E) / 2). Throws UsageError unless
/// E > E_star >= 0 and delta > 0.
double theoretical_exponent(double delta, double E, double E_star);

struct RateEstimate {
  double fitted_slope = 0.0;
  double intercept = 0.0;
  std::optional<double> theoretical_exponent;
  std::pair<double, double> window;
  std::size_t points = 0;
};

/// Least-squares slope of log p vs log T over window [lo, hi], skipping
/// p in {0, 1}. Throws InsufficientDataError below three usable points.
RateEstimate fit_loglog(std::span<const double> T, std::span<const double> p,
                        std::pair<double, double> window);

/// fit_loglog on the ensemble; the theoretical exponent is filled in when
/// E_star is known and below E.
RateEstimate fit_rate(const EnsembleResult& res, std::pair<double, double> window);

struct KernelRow {
  KernelKind kernel;
  EnsembleResult result;
};

/// One ensemble per kernel with the same seeds, schedules and checkpoints.
/// Throws UsageError for fewer than two kernels.
std::vector<KernelRow> compare_kernels(const RunConfig& cfg, std::span<const KernelKind> kernels,
                                       const EnsembleOptions& opts = {});

/// Long format: kernel followed by the ensemble columns.
std::string comparison_csv(std::span<const KernelRow> rows);

}  // namespace kanneal
