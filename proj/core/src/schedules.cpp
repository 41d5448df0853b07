#include "kanneal/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kanneal/errors.hpp"

namespace kanneal {

CoolingSchedule::CoolingSchedule(double E, double t0) : E_(E), t0_(t0) {
  if (!(E > 0.0) || !std::isfinite(E)) throw UsageError("cooling: E must be > 0");
  if (!(t0 > 1.0) || !std::isfinite(t0)) throw UsageError("cooling: t0 must be > 1");
}

double CoolingSchedule::epsilon_at(double t) const noexcept {
  return E_ / std::log(std::max(t, t0_));
}

double CoolingSchedule::epsilon_derivative_at(double t) const noexcept {
  if (t < t0_) return 0.0;
  const double lt = std::log(t);
  return -E_ / (t * lt * lt);
}

double beta_tilde(double r) {
  if (!(r > 0.0)) throw UsageError("beta_tilde: r must be > 0");
  return 1.0 / (2.0 * (1.0 + 1.0 / r) * (1.0 + 1.0 / std::sqrt(r / 3.0)));
}

double eta_star(double r, double L) {
  if (!(r > 0.0)) throw UsageError("eta_star: r must be > 0");
  if (!(L >= 1.0)) throw UsageError("eta_star: L must be >= 1");
  const double b = beta_tilde(r);
  const double num = std::min(b * r / (2.0 * L), 1.0 - b / r) *
                     std::min(1.0 - b * b / (r / 3.0), 0.5);
  const double den = std::max(9.0 * L * L / r + 4.0 / 3.0, L + 6.0) *
                     std::max(1.0 + 3.0 / (4.0 * r), 1.5);
  return num / den;
}

StabilityConstants stability_constants(double r, double L) {
  return {beta_tilde(r), eta_star(r, L)};
}

std::string_view to_string(CapPolicy policy) noexcept {
  switch (policy) {
    case CapPolicy::lipschitz: return "lipschitz";
    case CapPolicy::stability: return "stability";
  }
  return "lipschitz";
}

CapPolicy parse_cap_policy(std::string_view name) {
  if (name == "lipschitz") return CapPolicy::lipschitz;
  if (name == "stability") return CapPolicy::stability;
  throw UsageError("unknown cap policy '" + std::string(name) + "' (lipschitz|stability)");
}

double step_cap(CapPolicy policy, double r, double L) {
  if (!(L >= 1.0)) throw UsageError("step_cap: L must be >= 1");
  const double lip = 1.0 / L;
  if (policy == CapPolicy::lipschitz) return lip;
  return std::min(0.5 * eta_star(r, L), lip);
}

StepSchedule::StepSchedule(double C1, double C2, double dt_cap) : C1_(C1), C2_(C2), cap_(dt_cap) {
  if (!(C1 > 0.0) || !std::isfinite(C1)) throw UsageError("steps: C1 must be > 0");
  if (!(C2 > 0.0) || !std::isfinite(C2)) throw UsageError("steps: C2 must be > 0");
  if (!(dt_cap > 0.0)) throw UsageError("steps: dt cap must be > 0");
}

double StepSchedule::next_step(std::uint64_t k, double T_k) const noexcept {
  if (k == 0) return std::min(C1_, cap_);
  return std::min(C2_ / std::sqrt(T_k), cap_);
}

}  // namespace kanneal
