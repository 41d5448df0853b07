#include "kanneal/run_config.hpp"

#include <cmath>
#include <string>

#include "kanneal/errors.hpp"

namespace kanneal {

void RunConfig::validate() const {
  canonical_spec(potential);
  if (!(E > 0.0) || !std::isfinite(E)) throw UsageError("cooling.E must be > 0");
  if (!(t0 > 1.0) || !std::isfinite(t0)) throw UsageError("cooling.t0 must be > 1");
  if (!(C1 > 0.0) || !std::isfinite(C1)) throw UsageError("steps.C1 must be > 0");
  if (!(C2 > 0.0) || !std::isfinite(C2)) throw UsageError("steps.C2 must be > 0");
  if (cap_override && !(*cap_override > 0.0)) throw UsageError("steps.cap_override must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw UsageError("run.horizon must be > 0");
  if (replicas < 1) throw UsageError("run.replicas must be >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw UsageError("run.delta must be > 0");
  if (!(init.x_sigma >= 0.0) || !(init.y_sigma >= 0.0)) {
    throw UsageError("init.x_sigma and init.y_sigma must be >= 0");
  }
  if (checkpoints.empty()) throw UsageError("run.checkpoints must not be empty");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (!(checkpoints[i] > 0.0)) throw UsageError("run.checkpoints must be > 0");
    if (i > 0 && !(checkpoints[i] > checkpoints[i - 1])) {
      throw UsageError("run.checkpoints must be strictly increasing");
    }
  }
  if (checkpoints.back() > horizon) throw UsageError("run.checkpoints must not exceed run.horizon");
  if (rate_window && !(rate_window->first < rate_window->second)) {
    throw UsageError("rate.window_lo must be < rate.window_hi");
  }
}

std::vector<double> log_spaced_checkpoints(double first, double horizon, std::size_t per_decade) {
  if (!(first > 0.0) || !(horizon >= first)) {
    throw UsageError("checkpoints: need 0 < first checkpoint <= horizon");
  }
  if (per_decade == 0) throw UsageError("checkpoints: per_decade must be >= 1");
  std::vector<double> out;
  for (std::size_t j = 0;; ++j) {
    const double t = first * std::pow(10.0, static_cast<double>(j) / static_cast<double>(per_decade));
    if (t >= horizon * (1.0 - 1e-12)) break;
    out.push_back(t);
  }
  out.push_back(horizon);
  return out;
}

CoolingSchedule cooling_of(const RunConfig& cfg) { return CoolingSchedule(cfg.E, cfg.t0); }

StepSchedule steps_of(const RunConfig& cfg, const Potential& p) {
  const auto& k = p.constants();
  double cap = step_cap(cfg.cap_policy, k.r, k.L);
  if (cfg.cap_override) {
    if (*cfg.cap_override > cap) {
      throw UsageError("steps.cap_override " + std::to_string(*cfg.cap_override) +
                       " exceeds the " + std::string(to_string(cfg.cap_policy)) + " cap " +
                       std::to_string(cap));
    }
    cap = *cfg.cap_override;
  }
  return StepSchedule(cfg.C1, cfg.C2, cap);
}

std::pair<double, double> rate_window_of(const RunConfig& cfg) {
  if (cfg.rate_window) return *cfg.rate_window;
  return {cfg.horizon / 100.0, cfg.horizon};
}

}  // namespace kanneal
