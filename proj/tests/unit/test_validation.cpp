#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kanneal/errors.hpp"
#include "kanneal/kernel.hpp"
#include "kanneal/validation.hpp"

using namespace kanneal;

TEST_SUITE("validation") {

TEST_CASE("gauss_legendre") {
  for (std::size_t n : {1u, 2u, 5u, 32u}) {
    CAPTURE(n);
    const GaussRule g = gauss_legendre(n);
    REQUIRE(g.nodes.size() == n);
    double w = 0.0;
    for (double v : g.weights) w += v;
    CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
    // Exact for polynomials up to degree 2n - 1.
    const int deg = static_cast<int>(2 * n - 2);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], deg);
    CHECK(s == doctest::Approx(2.0 / (deg + 1)).epsilon(1e-13));
  }
  const GaussRule g2 = gauss_legendre(2);
  CHECK(std::abs(g2.nodes[0]) == doctest::Approx(1 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK_THROWS_AS(gauss_legendre(0), UsageError);
}

TEST_CASE("quadrature oracle agrees with the closed form") {
  const NoiseCov q = noise_cov_quadrature(1.0, std::numbers::ln2);
  CHECK(q.s11 == doctest::Approx(2 * std::numbers::ln2 - 1.25).epsilon(1e-13));
  CHECK(q.s12 == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(q.s22 == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("stationary oracle solves the Lyapunov recursion") {
  for (double dt : {0.01, 0.1, 0.7}) {
    CAPTURE(dt);
    const double eps = 0.5;
    const double em = -std::expm1(-dt);
    const double a11 = 1 - (dt - em), a12 = em, a21 = -em, a22 = 1 - em;
    const NoiseCov q = noise_cov(eps, dt);
    double v11 = 0, v12 = 0, v22 = 0;
    for (int i = 0; i < 200000; ++i) {
      const double n11 = a11 * a11 * v11 + 2 * a11 * a12 * v12 + a12 * a12 * v22 + q.s11;
      const double n12 = a11 * a21 * v11 + (a11 * a22 + a12 * a21) * v12 + a12 * a22 * v22 + q.s12;
      const double n22 = a21 * a21 * v11 + 2 * a21 * a22 * v12 + a22 * a22 * v22 + q.s22;
      v11 = n11, v12 = n12, v22 = n22;
    }
    const NoiseCov s = stationary_covariance_oracle(eps, dt);
    CHECK(s.s11 == doctest::Approx(v11).epsilon(1e-10));
    CHECK(s.s12 == doctest::Approx(v12).scale(1).epsilon(1e-10));
    CHECK(s.s22 == doctest::Approx(v22).epsilon(1e-10));
  }
  // Small steps approach the Gibbs covariance diag(eps, eps).
  const NoiseCov s = stationary_covariance_oracle(0.5, 1e-3);
  CHECK(s.s11 == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(s.s22 == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(std::abs(s.s12) < 1e-2);
}

TEST_CASE("stock build passes every property") {
  ValidationOptions o;
  o.lyapunov_steps = 200000;
  const auto res = run_validation(o);
  REQUIRE(res.size() == 5);
  for (const auto& r : res) {
    CAPTURE(r.name);
    CAPTURE(r.detail);
    CHECK(r.passed);
  }
}

TEST_CASE("flipped s12 is caught") {
  ValidationOptions o;
  o.lyapunov_steps = 200000;
  o.covariance = noise_cov_s12_flipped;
  const auto res = run_validation(o);
  bool any_failed = false;
  for (const auto& r : res) any_failed |= !r.passed;
  CHECK(any_failed);
  CHECK(!res[0].passed);
  CHECK(noise_cov_s12_flipped(1.0, 0.5).s12 == -noise_cov(1.0, 0.5).s12);
}

TEST_CASE("smaller min_dt still passes") {
  ValidationOptions o;
  o.min_dt = 1e-9;
  o.lyapunov_steps = 200000;
  for (const auto& r : run_validation(o)) {
    CAPTURE(r.name);
    CHECK(r.passed);
  }
  o.min_dt = 1e-3;
  CHECK_THROWS_AS(run_validation(o), UsageError);
  o.min_dt = 0.0;
  CHECK_THROWS_AS(run_validation(o), UsageError);
}

}  // TEST_SUITE
