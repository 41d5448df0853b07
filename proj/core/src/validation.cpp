#include "kanneal/validation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "kanneal/errors.hpp"
#include "kanneal/rng.hpp"

namespace kanneal {

GaussRule gauss_legendre(std::size_t n) {
  if (n == 0) throw UsageError("gauss_legendre: n must be >= 1");
  GaussRule rule{Vec(n), Vec(n)};
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nn + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

NoiseCov noise_cov_quadrature(double eps, double dt) {
  static const GaussRule rule = gauss_legendre(32);
  NoiseCov c;
  const double half = 0.5 * dt;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = half * (rule.nodes[i] + 1.0);
    const double w = rule.weights[i] * half;
    const double a = -std::expm1(-u);
    const double b = std::exp(-u);
    c.s11 += w * a * a;
    c.s12 += w * a * b;
    c.s22 += w * b * b;
  }
  c.s11 *= 2.0 * eps;
  c.s12 *= 2.0 * eps;
  c.s22 *= 2.0 * eps;
  return c;
}

NoiseCov stationary_covariance_oracle(double eps, double dt, double curvature) {
  const double em = -std::expm1(-dt);
  const double p = 1.0 - curvature * (dt - em);
  const double q = em;
  const double r = -curvature * em;
  const double s = std::exp(-dt);
  const NoiseCov Q = noise_cov_quadrature(eps, dt);

  Eigen::Matrix3d M;
  M << p * p, 2.0 * p * q, q * q,
       p * r, p * s + q * r, q * s,
       r * r, 2.0 * r * s, s * s;
  const Eigen::Vector3d v =
      (Eigen::Matrix3d::Identity() - M).fullPivLu().solve(Eigen::Vector3d(Q.s11, Q.s12, Q.s22));
  return {v[0], v[1], v[2]};
}

namespace {

class HalfSquare final : public Potential {
 public:
  HalfSquare() : Potential(1, AssumptionConstants{}) {}
  std::string_view family() const override { return "half_square"; }
  double minima_radius() const override { return 0.0; }

 protected:
  double do_value(std::span<const double> x) const override { return 0.5 * x[0] * x[0]; }
  void do_gradient(std::span<const double> x, std::span<double> out) const override {
    out[0] = x[0];
  }
};

}  // namespace

CovarianceEstimate empirical_stationary_covariance(double eps, double dt, std::uint64_t steps,
                                                   std::uint64_t burn_in, std::size_t batches,
                                                   std::uint64_t seed) {
  if (batches < 2 || steps < batches) {
    throw UsageError("empirical_stationary_covariance: need steps >= batches >= 2");
  }
  const HalfSquare p;
  NormalSource noise(seed);
  ExactSecondOrderStepper stepper(1);
  KineticState st{{0.0}, {0.0}, 0.0, 0};
  for (std::uint64_t k = 0; k < burn_in; ++k) stepper.step(st, p, eps, dt, noise);

  const std::uint64_t per = steps / batches;
  std::vector<std::array<double, 3>> means(batches, {0.0, 0.0, 0.0});
  for (std::size_t b = 0; b < batches; ++b) {
    auto& m = means[b];
    for (std::uint64_t k = 0; k < per; ++k) {
      stepper.step(st, p, eps, dt, noise);
      const double x = st.x[0], y = st.y[0];
      m[0] += x * x;
      m[1] += x * y;
      m[2] += y * y;
    }
    for (double& v : m) v /= static_cast<double>(per);
  }

  std::array<double, 3> mu{0.0, 0.0, 0.0}, var{0.0, 0.0, 0.0};
  const double B = static_cast<double>(batches);
  for (const auto& m : means) {
    for (int j = 0; j < 3; ++j) mu[j] += m[j] / B;
  }
  for (const auto& m : means) {
    for (int j = 0; j < 3; ++j) var[j] += (m[j] - mu[j]) * (m[j] - mu[j]) / (B - 1.0);
  }
  CovarianceEstimate est;
  est.mean = {mu[0], mu[1], mu[2]};
  est.standard_error = {std::sqrt(var[0] / B), std::sqrt(var[1] / B), std::sqrt(var[2] / B)};
  est.samples = static_cast<std::size_t>(per * batches);
  return est;
}

NoiseCov noise_cov_s12_flipped(double eps, double dt) {
  NoiseCov c = noise_cov(eps, dt);
  c.s12 = -c.s12;
  return c;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

PropertyResult psd_grid(const ValidationOptions& opts) {
  PropertyResult r{"noise_cov PSD grid", true, {}};
  double worst_det = 0.0, worst_rel = 0.0;
  std::size_t points = 0;
  for (double eps : log_grid(1e-4, 10.0, 100)) {
    for (double dt : log_grid(opts.min_dt, 5.0, 100)) {
      const NoiseCov c = opts.covariance(eps, dt);
      const NoiseCov q = noise_cov_quadrature(eps, dt);
      const double det = c.s11 * c.s22 - c.s12 * c.s12;
      worst_det = std::min(worst_det, det);
      worst_rel = std::max({worst_rel, rel_err(c.s11, q.s11), rel_err(c.s12, q.s12),
                            rel_err(c.s22, q.s22)});
      if (!(c.s11 >= 0.0) || !(c.s22 >= 0.0) || det < -1e-18) r.passed = false;
      ++points;
    }
  }
  if (worst_rel > 1e-9) r.passed = false;
  r.detail = std::to_string(points) + " points, min det " + fmt(worst_det) +
             ", max rel. deviation from quadrature " + fmt(worst_rel);
  return r;
}

PropertyResult small_step(const ValidationOptions& opts) {
  PropertyResult r{"small-step asymptotics", true, {}};
  double worst = 0.0;
  for (double h : log_grid(opts.min_dt, 1e-3, 60)) {
    const NoiseCov c = opts.covariance(1.0, h);
    // The first neglected term is at most h relative to the leading one;
    // the additive slack absorbs rounding at the smallest steps.
    const double e11 = rel_err(c.s11, 2.0 * h * h * h / 3.0);
    const double e12 = rel_err(c.s12, h * h);
    const double e22 = rel_err(c.s22, 2.0 * h);
    worst = std::max({worst, e11 / h, e12 / h, e22 / h});
    if (!(std::max({e11, e12, e22}) <= h + 1e-14)) r.passed = false;
  }
  const double below = 1e-3 * (1.0 - 1e-9), above = 1e-3 * (1.0 + 1e-9);
  const NoiseCov lo = opts.covariance(1.0, below), hi = opts.covariance(1.0, above);
  // Compare after removing the leading power so only the branch change shows.
  const double jump = std::max({rel_err(lo.s11 / (below * below * below), hi.s11 / (above * above * above)),
                                rel_err(lo.s12 / (below * below), hi.s12 / (above * above)),
                                rel_err(lo.s22 / below, hi.s22 / above)});
  if (!(jump < 1e-8)) r.passed = false;
  r.detail = "max (rel. error / dt) " + fmt(worst) + ", branch jump " + fmt(jump);
  return r;
}

std::vector<PotentialSpec> validation_potentials() {
  return {
      {"quadratic", 1, {{"curvature", 2.5}}},
      {"quadratic", 2, {}},
      {"cosine_well", 2, {{"A", 1.0}, {"omega", 1.0}}},
      {"cosine_well", 1, {{"A", 1.0}, {"omega", 3.0}}},
      {"blended_double_well", 1, {}},
  };
}

std::string label(const PotentialSpec& s) {
  return s.family + "/d" + std::to_string(s.dims);
}

PropertyResult finite_differences(std::uint64_t seed) {
  PropertyResult r{"finite-difference derivatives", true, {}};
  std::mt19937_64 rng(seed);
  double worst_g = 0.0, worst_h = 0.0;
  std::string where;
  for (const auto& spec : validation_potentials()) {
    const PotentialPtr p = make_potential(spec);
    const double w = p->minima_radius() + 2.0;
    std::uniform_real_distribution<double> unif(-w, w);
    const std::size_t d = p->dims();
    for (int s = 0; s < 200; ++s) {
      Vec x(d);
      for (auto& v : x) v = unif(rng);
      const Vec g = p->gradient(x);
      for (std::size_t i = 0; i < d; ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (p->value(xp) - p->value(xm)) / (2.0 * h);
        const double e = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
        if (e > worst_g) {
          worst_g = e;
          where = label(spec);
        }
        if (p->has_hessian()) {
          const Eigen::MatrixXd H = p->hessian(x);
          const Vec gp = p->gradient(xp), gm = p->gradient(xm);
          for (std::size_t j = 0; j < d; ++j) {
            const double fdh = (gp[j] - gm[j]) / (2.0 * h);
            const double eh = std::abs(fdh - H(static_cast<Eigen::Index>(j),
                                               static_cast<Eigen::Index>(i))) /
                              std::max(1.0, std::abs(fdh));
            worst_h = std::max(worst_h, eh);
          }
        }
      }
    }
  }
  if (!(worst_g <= 1e-6) || !(worst_h <= 1e-5)) r.passed = false;
  r.detail = "max gradient error " + fmt(worst_g) + " (" + where + "), max Hessian error " +
             fmt(worst_h);
  return r;
}

PropertyResult declared_constants(std::uint64_t seed) {
  PropertyResult r{"declared assumption constants", true, {}};
  std::string failures;
  for (const auto& spec : validation_potentials()) {
    const PotentialPtr p = make_potential(spec);
    const ConstantsReport rep = check_assumption_constants(*p, 10.0, 20000, seed);
    if (!rep.ok()) {
      r.passed = false;
      failures += " " + label(spec);
    }
  }
  r.detail = r.passed ? "all families within declared bounds" : "violations:" + failures;
  return r;
}

PropertyResult stationary_law(const ValidationOptions& opts) {
  PropertyResult r{"quadratic stationary covariance", true, {}};
  constexpr double eps = 0.5, dt = 0.1;
  const NoiseCov want = stationary_covariance_oracle(eps, dt);
  const CovarianceEstimate got =
      empirical_stationary_covariance(eps, dt, opts.lyapunov_steps, 10'000, 50, opts.seed);
  const double z11 = (got.mean.s11 - want.s11) / got.standard_error.s11;
  const double z12 = (got.mean.s12 - want.s12) / got.standard_error.s12;
  const double z22 = (got.mean.s22 - want.s22) / got.standard_error.s22;
  const double zmax = std::max({std::abs(z11), std::abs(z12), std::abs(z22)});
  if (!(zmax <= 4.0)) r.passed = false;
  r.detail = "z-scores (" + fmt(z11) + ", " + fmt(z12) + ", " + fmt(z22) + ") over " +
             std::to_string(got.samples) + " steps";
  return r;
}

}  // namespace

std::vector<PropertyResult> run_validation(const ValidationOptions& opts) {
  if (!(opts.min_dt > 0.0) || !(opts.min_dt < 1e-3)) {
    throw UsageError("validation: min_dt must lie in (0, 1e-3)");
  }
  if (!opts.covariance) throw UsageError("validation: no covariance function");
  return {psd_grid(opts), small_step(opts), finite_differences(opts.seed),
          declared_constants(opts.seed), stationary_law(opts)};
}

}  // namespace kanneal
