#include "kanneal/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "kanneal/errors.hpp"

namespace kanneal {

void AssumptionConstants::validate() const {
  if (!(L >= 1.0)) throw UsageError("assumption constants: L must be >= 1");
  if (!(r > 0.0)) throw UsageError("assumption constants: r must be > 0");
  if (!(m >= 0.0)) throw UsageError("assumption constants: m must be >= 0");
  if (!(L_hess >= 0.0)) throw UsageError("assumption constants: L_hess must be >= 0");
  if (e_star && !(*e_star >= 0.0)) throw UsageError("assumption constants: E_star must be >= 0");
}

Potential::Potential(std::size_t dims, AssumptionConstants constants)
    : dims_(dims), constants_(std::move(constants)) {
  if (dims_ == 0) throw UsageError("potential: dims must be positive");
  constants_.validate();
}

void Potential::set_constants(AssumptionConstants constants) {
  constants.validate();
  constants_ = std::move(constants);
}

void Potential::check_dims(std::size_t n) const {
  if (n != dims_) {
    std::ostringstream msg;
    msg << family() << ": expected a " << dims_ << "-vector, got length " << n;
    throw UsageError(msg.str());
  }
}

double Potential::value(std::span<const double> x) const {
  check_dims(x.size());
  return do_value(x);
}

void Potential::gradient(std::span<const double> x, std::span<double> out) const {
  check_dims(x.size());
  check_dims(out.size());
  do_gradient(x, out);
}

Vec Potential::gradient(std::span<const double> x) const {
  Vec g(dims_);
  gradient(x, g);
  return g;
}

Eigen::MatrixXd Potential::hessian(std::span<const double> x) const {
  check_dims(x.size());
  if (!has_hessian()) {
    throw CapabilityError(std::string(family()) + ": Hessian not available");
  }
  return do_hessian(x);
}

Eigen::MatrixXd Potential::do_hessian(std::span<const double>) const {
  throw CapabilityError(std::string(family()) + ": Hessian not available");
}

namespace {

// ---------------------------------------------------------------------------

class Quadratic final : public Potential {
 public:
  Quadratic(std::size_t dims, double curvature)
      : Potential(dims, make_constants(dims, curvature)), curvature_(curvature) {}

  std::string_view family() const override { return "quadratic"; }
  bool has_hessian() const noexcept override { return true; }
  double minima_radius() const override { return 1.0; }

 protected:
  double do_value(std::span<const double> x) const override {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return 0.5 * curvature_ * s;
  }
  void do_gradient(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = curvature_ * x[i];
  }
  Eigen::MatrixXd do_hessian(std::span<const double> x) const override {
    return curvature_ * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(x.size()),
                                                  static_cast<Eigen::Index>(x.size()));
  }

 private:
  static AssumptionConstants make_constants(std::size_t dims, double curvature) {
    if (!(curvature > 0.0) || !std::isfinite(curvature)) {
      throw UsageError("quadratic: curvature must be positive");
    }
    AssumptionConstants c;
    c.L = std::max(1.0, curvature);
    c.r = curvature;
    c.m = 0.0;
    c.L_hess = 0.0;
    c.e_star = 0.0;
    c.global_min_locations = {Vec(dims, 0.0)};
    return c;
  }

  double curvature_;
};

// ---------------------------------------------------------------------------

class CosineWell final : public Potential {
 public:
  CosineWell(double A, double omega, std::size_t dims)
      : Potential(dims, make_constants(A, omega, dims)), A_(A), omega_(omega) {}

  std::string_view family() const override { return "cosine_well"; }
  bool has_hessian() const noexcept override { return true; }
  double minima_radius() const override { return A_ * omega_ + 1.0; }

 protected:
  double do_value(std::span<const double> x) const override {
    double s = 0.0;
    for (double xi : x) s += coordinate_value(xi);
    return s;
  }
  void do_gradient(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = x[i] + A_ * omega_ * std::sin(omega_ * x[i]);
    }
  }
  Eigen::MatrixXd do_hessian(std::span<const double> x) const override {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      h(i, i) = 1.0 + A_ * omega_ * omega_ * std::cos(omega_ * x[static_cast<std::size_t>(i)]);
    }
    return h;
  }

 private:
  // 1 - cos(w x) written as 2 sin^2(w x / 2) to keep U >= 0 near the origin.
  double coordinate_value(double xi) const {
    const double s = std::sin(0.5 * omega_ * xi);
    return 0.5 * xi * xi + 2.0 * A_ * s * s;
  }

  static AssumptionConstants make_constants(double A, double omega, std::size_t dims) {
    if (!(A >= 0.0) || !std::isfinite(A)) throw UsageError("cosine_well: A must be >= 0");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw UsageError("cosine_well: omega must be > 0");
    AssumptionConstants c;
    const double aw2 = A * omega * omega;
    c.L = std::max(1.0, 1.0 + aw2);
    c.r = 0.5;
    c.m = static_cast<double>(dims) * A * A * omega * omega / 2.0;
    c.L_hess = A * omega * omega * omega;
    // U'' = 1 + A w^2 cos(w x) >= 0 coordinate-wise: convex, single minimum.
    if (aw2 <= 1.0) c.e_star = 0.0;
    c.global_min_locations = {Vec(dims, 0.0)};
    return c;
  }

  double A_;
  double omega_;
};

// ---------------------------------------------------------------------------

// Quintic smoothstep on [0, 1] and its first two derivatives.
struct Smoothstep {
  double s, ds, d2s;
};

Smoothstep smoothstep(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {t3 * (10.0 - 15.0 * t + 6.0 * t2), 30.0 * t2 * (1.0 - 2.0 * t + t2),
          60.0 * t * (1.0 - 3.0 * t + 2.0 * t2)};
}

struct Jet {
  double v, d1, d2;
};

class BlendedDoubleWell final : public Potential {
 public:
  BlendedDoubleWell(double tilt, double splice_radius)
      : Potential(1, AssumptionConstants{}), tilt_(tilt), radius_(splice_radius) {
    if (!std::isfinite(tilt)) throw UsageError("blended_double_well: tilt must be finite");
    if (!(splice_radius > 2.0) || !std::isfinite(splice_radius)) {
      throw UsageError("blended_double_well: splice_radius must be > 2");
    }
    calibrate();
  }

  std::string_view family() const override { return "blended_double_well"; }
  bool has_hessian() const noexcept override { return true; }
  double minima_radius() const override { return radius_ + 1.0; }

  double raw_value(double x) const { return jet(x).v; }

 protected:
  double do_value(std::span<const double> x) const override {
    return std::max(0.0, jet(x[0]).v + offset_);
  }
  void do_gradient(std::span<const double> x, std::span<double> out) const override {
    out[0] = jet(x[0]).d1;
  }
  Eigen::MatrixXd do_hessian(std::span<const double> x) const override {
    Eigen::MatrixXd h(1, 1);
    h(0, 0) = jet(x[0]).d2;
    return h;
  }

 private:
  // Value and derivatives of the un-offset potential.
  Jet jet(double x) const {
    // Work on the half line u = |x|; the core there is (u^2-1)^2 + c u.
    const bool right = x >= 0.0;
    const double u = right ? x : -x;
    const double c = right ? -tilt_ : tilt_;
    const double sign = right ? 1.0 : -1.0;

    Jet h;
    if (u <= radius_) {
      h = core(u, c);
    } else {
      const Jet q_r = core(radius_, c);
      const double t = u - radius_;
      if (t >= 1.0) {
        h = {q_r.v + q_r.d1 * t + 0.5 * q_r.d2 * t * t, q_r.d1 + q_r.d2 * t, q_r.d2};
      } else {
        // The core minus its Taylor polynomial at R is 4R t^3 + t^4.
        const Jet q = core(u, c);
        const double gap = -(4.0 * radius_ * t * t * t + t * t * t * t);
        const double dgap = -(12.0 * radius_ * t * t + 4.0 * t * t * t);
        const double d2gap = -(24.0 * radius_ * t + 12.0 * t * t);
        const Smoothstep s = smoothstep(t);
        h = {q.v + s.s * gap, q.d1 + s.ds * gap + s.s * dgap,
             q.d2 + s.d2s * gap + 2.0 * s.ds * dgap + s.s * d2gap};
      }
    }
    return {h.v, sign * h.d1, h.d2};
  }

  static Jet core(double u, double c) {
    const double u2 = u * u;
    const double w = u2 - 1.0;
    return {w * w + c * u, 4.0 * u * w + c, 12.0 * u2 - 4.0};
  }

  // Newton on U' from a grid bracket; falls back to the bracket midpoint.
  double refine_critical_point(double lo, double hi) const {
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
      const Jet j = jet(x);
      if (j.d2 == 0.0) break;
      double next = x - j.d1 / j.d2;
      if (!(next > lo && next < hi)) {
        // bisection on the sign of U'
        const double flo = jet(lo).d1;
        if ((flo < 0.0) == (j.d1 < 0.0)) lo = x; else hi = x;
        next = 0.5 * (lo + hi);
      }
      if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x))) {
        x = next;
        break;
      }
      x = next;
    }
    return x;
  }

  void calibrate() {
    const double half = radius_ + 1.0;
    const double step = 1e-4;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * half / step)) + 1;
    std::vector<double> xs(n), vs(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = -half + static_cast<double>(i) * step;
      vs[i] = raw_value(xs[i]);
    }

    struct Critical {
      double x, v;
    };
    std::vector<Critical> minima;
    std::vector<Critical> maxima;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (vs[i] < vs[i - 1] && vs[i] < vs[i + 1]) {
        const double x = refine_critical_point(xs[i - 1], xs[i + 1]);
        minima.push_back({x, raw_value(x)});
      } else if (vs[i] > vs[i - 1] && vs[i] > vs[i + 1]) {
        const double x = refine_critical_point(xs[i - 1], xs[i + 1]);
        maxima.push_back({x, raw_value(x)});
      }
    }
    if (minima.size() < 2) {
      std::ostringstream msg;
      msg << "blended_double_well: tilt " << tilt_ << " leaves " << minima.size()
          << " local minimum; need two";
      throw ConstructionError(msg.str());
    }

    double vmin = std::numeric_limits<double>::infinity();
    for (const auto& m : minima) vmin = std::min(vmin, m.v);
    offset_ = -vmin;

    AssumptionConstants c;
    std::vector<double> globals;
    for (const auto& m : minima) {
      if (m.v - vmin <= 1e-8) {
        globals.push_back(m.x);
        c.global_min_locations.push_back(Vec{m.x});
      }
    }

    // 1D barrier: walking from a local minimum to a global one crosses every
    // critical point in between, so the barrier is the highest maximum there.
    double e_star = 0.0;
    for (const auto& m : minima) {
      if (m.v - vmin <= 1e-8) continue;
      double best = std::numeric_limits<double>::infinity();
      for (double g : globals) {
        const double a = std::min(m.x, g);
        const double b = std::max(m.x, g);
        double top = std::max(m.v, raw_value(g));
        for (const auto& mx : maxima) {
          if (mx.x > a && mx.x < b) top = std::max(top, mx.v);
        }
        best = std::min(best, top);
      }
      e_star = std::max(e_star, best - m.v);
    }
    c.e_star = e_star;

    // Curvature bounds on a grid that covers the blend and a bit of tail.
    const double span = radius_ + 3.0;
    const double h = 1e-4;
    const auto nc = static_cast<std::size_t>(std::ceil(2.0 * span / h)) + 1;
    double max_d2 = 0.0;
    double max_d3 = 0.0;
    double prev_d2 = jet(-span).d2;
    for (std::size_t i = 1; i < nc; ++i) {
      const double x = -span + static_cast<double>(i) * h;
      const double d2 = jet(x).d2;
      max_d2 = std::max(max_d2, std::abs(d2));
      max_d3 = std::max(max_d3, std::abs(d2 - prev_d2) / h);
      prev_d2 = d2;
    }
    c.L = std::max(1.0, 1.1 * max_d2);
    c.L_hess = 1.1 * max_d3;

    // Beyond the blend grad(x).x grows like q''(R) x^2 >> x^2, so the
    // dissipativity gap peaks well inside [-50, 50].
    c.r = 1.0;
    double gap = 0.0;
    for (double x = -50.0; x <= 50.0; x += 1e-3) {
      gap = std::max(gap, c.r * x * x - jet(x).d1 * x);
    }
    c.m = 1.1 * gap;
    set_constants(std::move(c));
  }

  double tilt_;
  double radius_;
  double offset_ = 0.0;
};

// ---------------------------------------------------------------------------

class Scaled final : public Potential {
 public:
  Scaled(PotentialPtr base, double c)
      : Potential(base->dims(), scaled_constants(*base, c)), base_(std::move(base)), c_(c) {}

  std::string_view family() const override { return base_->family(); }
  bool has_hessian() const noexcept override { return base_->has_hessian(); }
  double minima_radius() const override { return base_->minima_radius(); }

 protected:
  double do_value(std::span<const double> x) const override { return c_ * base_->value(x); }
  void do_gradient(std::span<const double> x, std::span<double> out) const override {
    base_->gradient(x, out);
    for (double& g : out) g *= c_;
  }
  Eigen::MatrixXd do_hessian(std::span<const double> x) const override {
    return c_ * base_->hessian(x);
  }

 private:
  static AssumptionConstants scaled_constants(const Potential& base, double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw UsageError("scaled potential: factor must be > 0");
    AssumptionConstants k = base.constants();
    k.L = std::max(1.0, c * k.L);
    k.r *= c;
    k.m *= c;
    k.L_hess *= c;
    if (k.e_star) *k.e_star *= c;
    return k;
  }

  PotentialPtr base_;
  double c_;
};

class Redeclared final : public Potential {
 public:
  Redeclared(PotentialPtr base, AssumptionConstants constants)
      : Potential(base->dims(), std::move(constants)), base_(std::move(base)) {}

  std::string_view family() const override { return base_->family(); }
  bool has_hessian() const noexcept override { return base_->has_hessian(); }
  double minima_radius() const override { return base_->minima_radius(); }

 protected:
  double do_value(std::span<const double> x) const override { return base_->value(x); }
  void do_gradient(std::span<const double> x, std::span<double> out) const override {
    base_->gradient(x, out);
  }
  Eigen::MatrixXd do_hessian(std::span<const double> x) const override {
    return base_->hessian(x);
  }

 private:
  PotentialPtr base_;
};

}  // namespace

PotentialPtr make_quadratic(std::size_t dims, double curvature) {
  return std::make_shared<Quadratic>(dims, curvature);
}

PotentialPtr make_cosine_well(double A, double omega, std::size_t dims) {
  return std::make_shared<CosineWell>(A, omega, dims);
}

PotentialPtr make_blended_double_well(double tilt, double splice_radius) {
  return std::make_shared<BlendedDoubleWell>(tilt, splice_radius);
}

PotentialPtr make_scaled(PotentialPtr base, double c) {
  if (!base) throw UsageError("make_scaled: null potential");
  return std::make_shared<Scaled>(std::move(base), c);
}

PotentialPtr with_declared_constants(PotentialPtr base, AssumptionConstants constants) {
  if (!base) throw UsageError("with_declared_constants: null potential");
  return std::make_shared<Redeclared>(std::move(base), std::move(constants));
}

// --- registry ---------------------------------------------------------------

std::vector<std::string> registered_families() {
  return {"blended_double_well", "cosine_well", "quadratic"};
}

std::vector<ParameterInfo> family_parameters(std::string_view family) {
  if (family == "quadratic") return {{"curvature", 1.0}};
  if (family == "cosine_well") return {{"A", 1.0}, {"omega", 1.0}};
  if (family == "blended_double_well") return {{"splice_radius", 2.5}, {"tilt", 0.3}};
  throw UsageError("unknown potential family '" + std::string(family) + "'");
}

PotentialSpec canonical_spec(const PotentialSpec& spec) {
  const auto params = family_parameters(spec.family);
  PotentialSpec out{spec.family, spec.dims, {}};
  for (const auto& [name, value] : spec.params) {
    const bool known = std::any_of(params.begin(), params.end(),
                                   [&](const ParameterInfo& p) { return p.name == name; });
    if (!known) {
      throw UsageError("potential family '" + spec.family + "' has no parameter '" + name + "'");
    }
  }
  for (const auto& p : params) {
    const auto it = spec.params.find(p.name);
    out.params[p.name] = it == spec.params.end() ? p.default_value : it->second;
  }
  if (out.dims == 0) throw UsageError("potential dims must be positive");
  if (out.family == "blended_double_well" && out.dims != 1) {
    throw UsageError("blended_double_well is one-dimensional (potential.dims must be 1)");
  }
  return out;
}

PotentialPtr make_potential(const PotentialSpec& spec) {
  const PotentialSpec s = canonical_spec(spec);
  if (s.family == "quadratic") return make_quadratic(s.dims, s.params.at("curvature"));
  if (s.family == "cosine_well") {
    return make_cosine_well(s.params.at("A"), s.params.at("omega"), s.dims);
  }
  return make_blended_double_well(s.params.at("tilt"), s.params.at("splice_radius"));
}

// --- empirical constant check -----------------------------------------------

std::size_t ConstantsReport::violation_count() const noexcept {
  return static_cast<std::size_t>(nonnegative_violated) + lipschitz_violated +
         dissipativity_violated + hessian_lipschitz_violated;
}

ConstantsReport check_assumption_constants(const Potential& p, double box_half_width,
                                           std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw UsageError("check_assumption_constants: samples must be >= 1");
  if (!(box_half_width > 0.0)) throw UsageError("check_assumption_constants: box must be non-empty");

  const std::size_t d = p.dims();
  const AssumptionConstants& k = p.constants();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-box_half_width, box_half_width);
  std::uniform_real_distribution<double> log_dist(std::log(1e-4), std::log(box_half_width));
  std::normal_distribution<double> normal;

  ConstantsReport rep;
  rep.samples = samples;
  rep.min_value = std::numeric_limits<double>::infinity();
  rep.max_dissipativity_gap = -std::numeric_limits<double>::infinity();
  rep.hessian_checked = p.has_hessian();

  Vec a(d), b(d), ga(d), gb(d);
  auto dissipativity_gap = [&](const Vec& x, const Vec& g) {
    double xx = 0.0, gx = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      xx += x[i] * x[i];
      gx += g[i] * x[i];
    }
    return k.r * xx - k.m - gx;
  };

  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& ai : a) ai = box(rng);
    if (s % 2 == 0) {
      for (auto& bi : b) bi = box(rng);
    } else {
      // close pairs probe local curvature
      double norm = 0.0;
      Vec dir(d);
      for (auto& di : dir) {
        di = normal(rng);
        norm += di * di;
      }
      norm = std::sqrt(norm);
      const double dist = std::exp(log_dist(rng));
      for (std::size_t i = 0; i < d; ++i) b[i] = a[i] + dist * dir[i] / norm;
    }

    rep.min_value = std::min({rep.min_value, p.value(a), p.value(b)});
    p.gradient(a, ga);
    p.gradient(b, gb);
    double dx2 = 0.0, dg2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dx2 += (a[i] - b[i]) * (a[i] - b[i]);
      dg2 += (ga[i] - gb[i]) * (ga[i] - gb[i]);
    }
    const double dx = std::sqrt(dx2);
    if (dx > 0.0) {
      rep.max_gradient_ratio = std::max(rep.max_gradient_ratio, std::sqrt(dg2) / dx);
      if (rep.hessian_checked) {
        const double dh = (p.hessian(a) - p.hessian(b)).norm();
        rep.max_hessian_ratio = std::max(rep.max_hessian_ratio, dh / dx);
      }
    }
    rep.max_dissipativity_gap =
        std::max({rep.max_dissipativity_gap, dissipativity_gap(a, ga), dissipativity_gap(b, gb)});
  }

  constexpr double slack = 1e-9;
  rep.nonnegative_violated = rep.min_value < -slack;
  rep.lipschitz_violated = rep.max_gradient_ratio > k.L + slack;
  rep.dissipativity_violated = rep.max_dissipativity_gap > slack;
  rep.hessian_lipschitz_violated = rep.hessian_checked && rep.max_hessian_ratio > k.L_hess + slack;
  return rep;
}

}  // namespace kanneal
