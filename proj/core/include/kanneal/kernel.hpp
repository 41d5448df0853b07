#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kanneal/potentials.hpp"

namespace kanneal {

/// Position, velocity and clock of one kinetic replica.
struct KineticState {
  Vec x;
  Vec y;
  double T = 0.0;
  std::uint64_t k = 0;
};

struct OverdampedState {
  Vec x;
  double T = 0.0;
  std::uint64_t k = 0;
};

/// Per-coordinate covariance of the exact increment (D_x, D_y) over one step.
struct NoiseCov {
  double s11 = 0.0;
  double s12 = 0.0;
  double s22 = 0.0;
};

/// dt - (1 - e^{-dt}), accurate for small dt.
double dt_minus_expm1(double dt) noexcept;

/// Covariance of the exact increment at frozen temperature eps over dt:
///   s11 = eps (2 dt - 3 + 4 e^{-dt} - e^{-2 dt})
///   s12 = eps (1 - e^{-dt})^2
///   s22 = eps (1 - e^{-2 dt})
/// Below dt = 1e-3 all three use Taylor series (leading order plus four terms);
/// up to dt = 0.5, s11 is summed from its power series to avoid cancellation.
/// Throws UsageError unless eps > 0 and dt > 0.
NoiseCov noise_cov(double eps, double dt);

/// Lower-triangular square root [[a, 0], [b, c]] of a NoiseCov.
struct NoiseFactor {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

NoiseFactor factor(const NoiseCov& cov) noexcept;

template <class Noise>
std::pair<Vec, Vec> sample_noise(const NoiseCov& cov, std::size_t dims, Noise& noise) {
  const NoiseFactor f = factor(cov);
  Vec dx(dims), dy(dims);
  for (std::size_t i = 0; i < dims; ++i) {
    const double z1 = noise();
    const double z2 = noise();
    dx[i] = f.a * z1;
    dy[i] = f.b * z1 + f.c * z2;
  }
  return {std::move(dx), std::move(dy)};
}

enum class KernelKind { exact_second_order, euler_kinetic, overdamped_euler };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind parse_kernel(std::string_view name);

namespace detail {

// Throws NumericalError carrying a dump of the state.
[[noreturn]] void throw_non_finite(std::string_view what, std::uint64_t k, double T,
                                   std::span<const double> x, std::span<const double> y);

inline bool all_finite(std::span<const double> v) noexcept {
  for (double e : v) {
    if (!std::isfinite(e)) return false;
  }
  return true;
}

void check_step_args(double eps, double dt);
void check_velocity_dims(std::size_t y_size, std::size_t dims);

}  // namespace detail

/// Exact solution of the frozen-gradient kinetic SDE over one step.
///
/// Holds a gradient buffer so repeated steps do not allocate.
class ExactSecondOrderStepper {
 public:
  explicit ExactSecondOrderStepper(std::size_t dims) : grad_(dims) {}

  template <class Noise>
  void step(KineticState& st, const Potential& p, double eps, double dt, Noise& noise) {
    detail::check_step_args(eps, dt);
    detail::check_velocity_dims(st.y.size(), grad_.size());
    p.gradient(st.x, grad_);
    if (!detail::all_finite(grad_)) detail::throw_non_finite("gradient", st.k, st.T, st.x, st.y);

    const double em = -std::expm1(-dt);  // 1 - e^{-dt}
    const double decay = 1.0 - em;
    const double drift = dt_minus_expm1(dt);
    const NoiseFactor f = factor(noise_cov(eps, dt));
    for (std::size_t i = 0; i < grad_.size(); ++i) {
      const double z1 = noise();
      const double z2 = noise();
      const double x = st.x[i];
      const double y = st.y[i];
      st.x[i] = x + em * y - drift * grad_[i] + f.a * z1;
      st.y[i] = decay * y - em * grad_[i] + f.b * z1 + f.c * z2;
    }
    st.T += dt;
    ++st.k;
  }

 private:
  Vec grad_;
};

/// Euler-Maruyama discretisation of the kinetic SDE.
class EulerKineticStepper {
 public:
  explicit EulerKineticStepper(std::size_t dims) : grad_(dims) {}

  template <class Noise>
  void step(KineticState& st, const Potential& p, double eps, double dt, Noise& noise) {
    detail::check_step_args(eps, dt);
    detail::check_velocity_dims(st.y.size(), grad_.size());
    p.gradient(st.x, grad_);
    if (!detail::all_finite(grad_)) detail::throw_non_finite("gradient", st.k, st.T, st.x, st.y);

    const double sigma = std::sqrt(2.0 * eps * dt);
    for (std::size_t i = 0; i < grad_.size(); ++i) {
      const double x = st.x[i];
      const double y = st.y[i];
      st.x[i] = x + y * dt;
      st.y[i] = y - grad_[i] * dt - y * dt + sigma * noise();
    }
    st.T += dt;
    ++st.k;
  }

 private:
  Vec grad_;
};

/// Euler discretisation of the overdamped annealing SDE.
class OverdampedStepper {
 public:
  explicit OverdampedStepper(std::size_t dims) : grad_(dims) {}

  template <class Noise>
  void step(OverdampedState& st, const Potential& p, double eps, double dt, Noise& noise) {
    detail::check_step_args(eps, dt);
    p.gradient(st.x, grad_);
    if (!detail::all_finite(grad_)) detail::throw_non_finite("gradient", st.k, st.T, st.x, {});

    const double sigma = std::sqrt(2.0 * eps * dt);
    for (std::size_t i = 0; i < grad_.size(); ++i) {
      st.x[i] += -grad_[i] * dt + sigma * noise();
    }
    st.T += dt;
    ++st.k;
  }

 private:
  Vec grad_;
};

// One-shot conveniences; prefer the stepper classes in loops.

template <class Noise>
void step_exact(KineticState& st, const Potential& p, double eps, double dt, Noise& noise) {
  ExactSecondOrderStepper(p.dims()).step(st, p, eps, dt, noise);
}

template <class Noise>
void step_euler_kinetic(KineticState& st, const Potential& p, double eps, double dt,
                        Noise& noise) {
  EulerKineticStepper(p.dims()).step(st, p, eps, dt, noise);
}

template <class Noise>
void step_overdamped(OverdampedState& st, const Potential& p, double eps, double dt,
                     Noise& noise) {
  OverdampedStepper(p.dims()).step(st, p, eps, dt, noise);
}

/// Mean of (X_t, Y_t) at T + t_offset given the state at T, with the gradient
/// frozen at x. Throws UsageError unless 0 < t_offset <= dt.
std::pair<Vec, Vec> conditional_mean_within_step(const KineticState& st, const Potential& p,
                                                 double t_offset, double dt);

}  // namespace kanneal
