#include "kanneal/kernel.hpp"

#include <algorithm>
#include <sstream>

#include "kanneal/errors.hpp"

namespace kanneal {

namespace {
constexpr double kSeriesThreshold = 1e-3;

// 2h - 3 + 4e^{-h} - e^{-2h} = sum_{n>=3} (-1)^n (4 - 2^n) h^n / n!.
double s11_series(double h) noexcept {
  double term = -h;  // (-h)^n / n! at n = 1
  double pow2 = 2.0;
  double sum = 0.0;
  for (int n = 2; n < 40; ++n) {
    term *= -h / n;
    pow2 *= 2.0;
    if (n < 3) continue;
    const double t = (4.0 - pow2) * term;
    sum += t;
    if (std::abs(t) < 1e-18 * sum) break;
  }
  return sum;
}
}

double dt_minus_expm1(double h) noexcept {
  if (h < kSeriesThreshold) {
    // h^2/2 - h^3/6 + h^4/24 - h^5/120
    return h * h * (1.0 / 2 - h * (1.0 / 6 - h * (1.0 / 24 - h / 120)));
  }
  return h + std::expm1(-h);
}

NoiseCov noise_cov(double eps, double dt) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw UsageError("noise_cov: eps must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("noise_cov: dt must be > 0");

  const double h = dt;
  NoiseCov c;
  if (h < kSeriesThreshold) {
    const double h2 = h * h;
    const double h3 = h2 * h;
    c.s11 = h3 * (2.0 / 3 - h * (1.0 / 2 - h * (7.0 / 30 - h * (1.0 / 12 - h * 31.0 / 1260))));
    c.s12 = h2 * (1.0 - h * (1.0 - h * (7.0 / 12 - h * (1.0 / 4 - h * 31.0 / 360))));
    c.s22 = h * (2.0 - h * (2.0 - h * (4.0 / 3 - h * (2.0 / 3 - h * 4.0 / 15))));
  } else if (h < 0.5) {
    // The closed form for s11 cancels to h^3 here; sum its series instead.
    c.s11 = s11_series(h);
    const double em = -std::expm1(-h);
    c.s12 = em * em;
    c.s22 = em * (2.0 - em);
  } else {
    const double em = -std::expm1(-h);
    c.s11 = 2.0 * dt_minus_expm1(h) - em * em;
    c.s12 = em * em;
    c.s22 = em * (2.0 - em);
  }
  c.s11 *= eps;
  c.s12 *= eps;
  c.s22 *= eps;
  return c;
}

NoiseFactor factor(const NoiseCov& cov) noexcept {
  NoiseFactor f;
  if (cov.s11 <= 0.0) {
    f.c = std::sqrt(std::max(cov.s22, 0.0));
    return f;
  }
  f.a = std::sqrt(cov.s11);
  f.b = cov.s12 / f.a;
  f.c = std::sqrt(std::max(cov.s22 - f.b * f.b, 0.0));
  return f;
}

std::string_view to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::exact_second_order: return "exact_second_order";
    case KernelKind::euler_kinetic: return "euler_kinetic";
    case KernelKind::overdamped_euler: return "overdamped_euler";
  }
  return "exact_second_order";
}

KernelKind parse_kernel(std::string_view name) {
  if (name == "exact_second_order") return KernelKind::exact_second_order;
  if (name == "euler_kinetic") return KernelKind::euler_kinetic;
  if (name == "overdamped_euler") return KernelKind::overdamped_euler;
  throw UsageError("unknown kernel '" + std::string(name) +
                   "' (exact_second_order|euler_kinetic|overdamped_euler)");
}

namespace detail {

void throw_non_finite(std::string_view what, std::uint64_t k, double T,
                      std::span<const double> x, std::span<const double> y) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "non-finite " << what << " at step k=" << k << " T=" << T << " x=[";
  for (std::size_t i = 0; i < x.size(); ++i) msg << (i ? "," : "") << x[i];
  msg << "]";
  if (!y.empty()) {
    msg << " y=[";
    for (std::size_t i = 0; i < y.size(); ++i) msg << (i ? "," : "") << y[i];
    msg << "]";
  }
  throw NumericalError(msg.str());
}

void check_step_args(double eps, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("step: dt must be > 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw UsageError("step: eps must be > 0");
}

void check_velocity_dims(std::size_t y_size, std::size_t dims) {
  if (y_size != dims) throw UsageError("step: velocity has wrong length");
}

}  // namespace detail

std::pair<Vec, Vec> conditional_mean_within_step(const KineticState& st, const Potential& p,
                                                 double t_offset, double dt) {
  if (!(t_offset > 0.0) || !(t_offset <= dt)) {
    throw UsageError("conditional_mean_within_step: t_offset must lie in (0, dt]");
  }
  const Vec g = p.gradient(st.x);
  const double em = -std::expm1(-t_offset);
  const double drift = dt_minus_expm1(t_offset);
  Vec xm(g.size()), ym(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    xm[i] = st.x[i] + em * st.y[i] - drift * g[i];
    ym[i] = (1.0 - em) * st.y[i] - em * g[i];
  }
  return {std::move(xm), std::move(ym)};
}

}  // namespace kanneal
