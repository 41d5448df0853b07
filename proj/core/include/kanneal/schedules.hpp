#pragma once

#include <cstdint>
#include <numbers>
#include <string_view>

namespace kanneal {

/// Default warm-up time t0 = e^2.
inline constexpr double kDefaultWarmup = std::numbers::e * std::numbers::e;

/// Logarithmic cooling clamped before the warm-up time:
/// eps(t) = E / log(max(t, t0)).
class CoolingSchedule {
 public:
  explicit CoolingSchedule(double E, double t0 = kDefaultWarmup);

  [[nodiscard]] double E() const noexcept { return E_; }
  [[nodiscard]] double t0() const noexcept { return t0_; }

  [[nodiscard]] double epsilon_at(double t) const noexcept;

  /// 0 before t0 and -E / (t log^2 t) after it. At t == t0 the right-hand
  /// value is returned.
  [[nodiscard]] double epsilon_derivative_at(double t) const noexcept;

 private:
  double E_;
  double t0_;
};

/// beta~(r) = 1 / (2 (1 + 1/r) (1 + 1/sqrt(r/3))).
double beta_tilde(double r);

/// eta*(r, L): the step bound under which the discrete scheme keeps uniformly
/// bounded second moments.
double eta_star(double r, double L);

struct StabilityConstants {
  double beta_tilde;
  double eta_star;
};

StabilityConstants stability_constants(double r, double L);

enum class CapPolicy {
  lipschitz,  // dt <= 1/L
  stability,  // dt <= min(eta*/2, 1/L)
};

std::string_view to_string(CapPolicy policy) noexcept;
CapPolicy parse_cap_policy(std::string_view name);

/// Upper bound on dt implied by `policy` for a potential with constants (r, L).
double step_cap(CapPolicy policy, double r, double L);

/// dt_0 = min(C1, cap), dt_k = min(C2 / sqrt(T_k), cap) for k >= 1.
class StepSchedule {
 public:
  StepSchedule(double C1, double C2, double dt_cap);

  [[nodiscard]] double C1() const noexcept { return C1_; }
  [[nodiscard]] double C2() const noexcept { return C2_; }
  [[nodiscard]] double dt_cap() const noexcept { return cap_; }

  [[nodiscard]] double next_step(std::uint64_t k, double T_k) const noexcept;

 private:
  double C1_;
  double C2_;
  double cap_;
};

}  // namespace kanneal
