#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "kanneal/errors.hpp"
#include "kanneal/kernel.hpp"
#include "kanneal/rng.hpp"
#include "test_support.hpp"

using namespace kanneal;
using kanneal::testing::LinearForce;
using kanneal::testing::mean_se;

namespace {

const double ln2 = std::numbers::ln2;

struct Frozen {
  double h, s11, s12, s22;
};

// eps = 1, evaluated in 40-digit arithmetic from the closed forms.
const Frozen kFrozen[] = {
    {1e-9, 6.666666661666666669e-28, 9.9999999900000000058e-19, 1.9999999980000000013e-9},
    {1e-8, 6.6666666166666669e-25, 9.9999999000000005833e-17, 1.9999999800000001333e-8},
    {1e-6, 6.6666616666689999992e-19, 9.9999900000058333308e-13, 1.9999980000013333327e-6},
    {1e-4, 6.6661666899991666913e-13, 9.9990000583308334194e-9, 0.00019998000133326666933},
    {0.000999, 6.6417089508818701143e-10, 9.9700457775583074066e-7, 0.0019960053266735932503},
    {0.001, 6.6616689991669126359e-10, 9.9900058308341941945e-7, 0.0019980013326669332445},
    {0.01, 6.616899169120748098e-7, 0.000099005808419195073002, 0.019801326693244697779},
    {0.5, 0.05824319767909137282, 0.15481812174617547439, 0.6321205588285576784},
    {5, 7.0269063880665793835, 0.98656950593159155066, 0.99995460007023751515},
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("noise_cov at dt = ln 2") {
  const NoiseCov c = noise_cov(1.0, ln2);
  CHECK(std::abs(c.s11 - (2 * ln2 - 1.25)) < 1e-12);
  CHECK(std::abs(c.s12 - 0.25) < 1e-12);
  CHECK(std::abs(c.s22 - 0.75) < 1e-12);
  CHECK(c.s11 == doctest::Approx(0.136294).epsilon(1e-5));

  const NoiseCov d = noise_cov(2.0, ln2);
  CHECK(d.s11 == 2 * c.s11);
  CHECK(d.s12 == 2 * c.s12);
  CHECK(d.s22 == 2 * c.s22);
}

TEST_CASE("noise_cov against high-precision values") {
  for (const auto& f : kFrozen) {
    CAPTURE(f.h);
    const NoiseCov c = noise_cov(1.0, f.h);
    CHECK(rel(c.s11, f.s11) < 1e-12);
    CHECK(rel(c.s12, f.s12) < 1e-13);
    CHECK(rel(c.s22, f.s22) < 1e-13);
  }
}

TEST_CASE("noise_cov leading orders") {
  // The first correction to s11 is -3h/4 relative, so the 1e-4 band holds
  // for h below 1.3e-4.
  for (double h = 1e-8; h <= 1e-4; h *= 1.3) {
    const NoiseCov c = noise_cov(1.0, h);
    CHECK(std::abs(c.s11 / (2.0 / 3.0 * h * h * h) - 1) < 1e-4);
    CHECK(std::abs(c.s12 / (h * h) - 1) < 1e-4 * 1.5);
    CHECK(std::abs(c.s22 / (2 * h) - 1) < 1e-4 * 1.5);
  }
}

TEST_CASE("noise_cov is a covariance on a log grid") {
  for (int i = 0; i < 100; ++i) {
    const double eps = 1e-4 * std::pow(1e5, i / 99.0);
    for (int j = 0; j < 100; ++j) {
      const double dt = 1e-8 * std::pow(5e8, j / 99.0);
      const NoiseCov c = noise_cov(eps, dt);
      REQUIRE(c.s11 >= 0.0);
      REQUIRE(c.s22 >= 0.0);
      REQUIRE(c.s11 * c.s22 - c.s12 * c.s12 >= -1e-18);
    }
  }
}

TEST_CASE("noise_cov rejects non-positive inputs") {
  CHECK_THROWS_AS(noise_cov(0.0, 1.0), UsageError);
  CHECK_THROWS_AS(noise_cov(1.0, 0.0), UsageError);
  CHECK_THROWS_AS(noise_cov(-1.0, 1.0), UsageError);
  CHECK_THROWS_AS(noise_cov(1.0, std::numeric_limits<double>::infinity()), UsageError);
}

TEST_CASE("dt_minus_expm1") {
  for (double h : {1e-9, 1e-5, 9.99e-4, 1e-3, 0.1, 2.0}) {
    CAPTURE(h);
    // sum_{n>=2} (-h)^n / n!, no cancellation against h.
    long double term = -static_cast<long double>(h), exact = 0.0L;
    for (int n = 2; n < 60; ++n) {
      term *= -static_cast<long double>(h) / n;
      exact += term;
    }
    CHECK(rel(dt_minus_expm1(h), static_cast<double>(exact)) < 1e-12);
  }
}

TEST_CASE("sample_noise degenerate and moment checks") {
  NormalSource rng(7);
  auto [dx0, dy0] = sample_noise(NoiseCov{0, 0, 0}, 3, rng);
  for (double v : dx0) CHECK(v == 0.0);
  for (double v : dy0) CHECK(v == 0.0);

  for (const NoiseCov cov : {NoiseCov{1, 0, 1}, noise_cov(1.0, ln2)}) {
    const int n = 1'000'000;
    std::vector<double> xx(n), xy(n), yy(n);
    for (int i = 0; i < n; ++i) {
      auto [dx, dy] = sample_noise(cov, 1, rng);
      xx[i] = dx[0] * dx[0];
      xy[i] = dx[0] * dy[0];
      yy[i] = dy[0] * dy[0];
    }
    const auto a = mean_se(xx), b = mean_se(xy), c = mean_se(yy);
    CHECK(std::abs(a.mean - cov.s11) < 4 * a.se);
    CHECK(std::abs(b.mean - cov.s12) < 4 * b.se);
    CHECK(std::abs(c.mean - cov.s22) < 4 * c.se);
  }

  const NoiseFactor f = factor(NoiseCov{0, 0, 4});
  CHECK(f.a == 0.0);
  CHECK(f.c == 2.0);
}

TEST_CASE("exact step with suppressed noise") {
  ZeroNoise zero;
  const LinearForce flat({0.0});
  KineticState st{{0.0}, {1.0}, 0.0, 0};
  step_exact(st, flat, 1.0, ln2, zero);
  CHECK(st.x[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(st.y[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(st.T == ln2);
  CHECK(st.k == 1);

  const auto quad = make_quadratic(1);
  KineticState q{{1.0}, {0.0}, 0.0, 0};
  step_exact(q, *quad, 1.0, ln2, zero);
  CHECK(q.x[0] == doctest::Approx(1 - (ln2 - 0.5)).epsilon(1e-15));
  CHECK(q.x[0] == doctest::Approx(0.806853).epsilon(1e-6));
  CHECK(q.y[0] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("Euler kinetic step with suppressed noise") {
  ZeroNoise zero;
  const LinearForce flat({0.0});
  KineticState st{{0.0}, {1.0}, 0.0, 0};
  step_euler_kinetic(st, flat, 1.0, 0.5, zero);
  CHECK(st.x[0] == 0.5);
  CHECK(st.y[0] == 0.5);

  const auto quad = make_quadratic(1);
  KineticState q{{1.0}, {0.0}, 0.0, 0};
  step_euler_kinetic(q, *quad, 1.0, ln2, zero);
  CHECK(q.x[0] == 1.0);
  CHECK(q.y[0] == doctest::Approx(-ln2).epsilon(1e-15));
}

TEST_CASE("Euler and exact flows agree as dt shrinks") {
  ZeroNoise zero;
  const auto quad = make_quadratic(1);
  KineticState a{{1.0}, {0.5}, 0.0, 0}, b = a;
  ExactSecondOrderStepper ex(1);
  EulerKineticStepper eu(1);
  for (int i = 0; i < 1000; ++i) {
    ex.step(a, *quad, 1.0, 1e-3, zero);
    eu.step(b, *quad, 1.0, 1e-3, zero);
  }
  CHECK(std::abs(a.x[0] - b.x[0]) < 5e-3);
  CHECK(std::abs(a.y[0] - b.y[0]) < 5e-3);
  CHECK(std::abs(a.x[0] - b.x[0]) > 0.0);
}

TEST_CASE("overdamped step") {
  ZeroNoise zero;
  const LinearForce flat({0.0, 0.0});
  OverdampedState st{{0.3, -2.0}, 0.0, 0};
  step_overdamped(st, flat, 1.0, 0.1, zero);
  CHECK(st.x == Vec{0.3, -2.0});

  const auto quad = make_quadratic(1);
  OverdampedState q{{1.0}, 0.0, 0};
  step_overdamped(q, *quad, 1.0, 0.1, zero);
  CHECK(q.x[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("overdamped stationary variance") {
  const auto quad = make_quadratic(1);
  const double eps = 0.7, dt = 0.01;
  const double oracle = eps * 2 * dt / (1 - (1 - dt) * (1 - dt));
  CHECK(oracle == doctest::Approx(eps / (1 - dt / 2)).epsilon(1e-12));

  NormalSource rng(3);
  OverdampedStepper stepper(1);
  OverdampedState st{{0.0}, 0.0, 0};
  for (int i = 0; i < 5000; ++i) stepper.step(st, *quad, eps, dt, rng);
  const int batches = 100, per = 20000;
  std::vector<double> means(batches);
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (int i = 0; i < per; ++i) {
      stepper.step(st, *quad, eps, dt, rng);
      s += st.x[0] * st.x[0];
    }
    means[b] = s / per;
  }
  const auto ms = mean_se(means);
  CHECK(std::abs(ms.mean - oracle) < 4 * ms.se);
}

TEST_CASE("exact step is Gaussian with the closed-form moments") {
  const auto p = make_cosine_well(1.0, 2.0, 1);
  const KineticState start{{0.4}, {-0.3}, 5.0, 3};
  const double eps = 0.6, dt = 0.3;
  const auto [mx, my] = conditional_mean_within_step(start, *p, dt, dt);
  const NoiseCov cov = noise_cov(eps, dt);

  NormalSource rng(9);
  ExactSecondOrderStepper stepper(1);
  const int n = 200000;
  std::vector<double> dx(n), dy(n), xx(n), xy(n), yy(n);
  for (int i = 0; i < n; ++i) {
    KineticState st = start;
    stepper.step(st, *p, eps, dt, rng);
    dx[i] = st.x[0] - mx[0];
    dy[i] = st.y[0] - my[0];
    xx[i] = dx[i] * dx[i];
    xy[i] = dx[i] * dy[i];
    yy[i] = dy[i] * dy[i];
  }
  const auto a = mean_se(dx), b = mean_se(dy);
  CHECK(std::abs(a.mean) < 4 * a.se);
  CHECK(std::abs(b.mean) < 4 * b.se);
  const auto c11 = mean_se(xx), c12 = mean_se(xy), c22 = mean_se(yy);
  CHECK(std::abs(c11.mean - cov.s11) < 4 * c11.se);
  CHECK(std::abs(c12.mean - cov.s12) < 4 * c12.se);
  CHECK(std::abs(c22.mean - cov.s22) < 4 * c22.se);
}

TEST_CASE("constant force: one step equals two half steps") {
  const LinearForce force({0.8, -1.5});
  ZeroNoise zero;
  for (double dt : {1e-3, 0.1, 0.7, 2.0}) {
    CAPTURE(dt);
    KineticState one{{0.2, 1.0}, {-0.4, 0.9}, 0.0, 0};
    KineticState two = one;
    step_exact(one, force, 1.0, dt, zero);
    step_exact(two, force, 1.0, dt / 2, zero);
    step_exact(two, force, 1.0, dt / 2, zero);
    for (int i = 0; i < 2; ++i) {
      CHECK(one.x[i] == doctest::Approx(two.x[i]).epsilon(1e-14));
      CHECK(one.y[i] == doctest::Approx(two.y[i]).epsilon(1e-14));
    }

    const double eps = 0.9;
    const NoiseCov full = noise_cov(eps, dt);
    const NoiseCov half = noise_cov(eps, dt / 2);
    const double em = -std::expm1(-dt / 2), s = std::exp(-dt / 2);
    // A S A^T + S with A = [[1, em], [0, s]].
    const double c11 = half.s11 + 2 * em * half.s12 + em * em * half.s22 + half.s11;
    const double c12 = s * half.s12 + em * s * half.s22 + half.s12;
    const double c22 = s * s * half.s22 + half.s22;
    CHECK(std::abs(c11 - full.s11) < 1e-12);
    CHECK(std::abs(c12 - full.s12) < 1e-12);
    CHECK(std::abs(c22 - full.s22) < 1e-12);
  }
}

TEST_CASE("conditional mean within a step") {
  const LinearForce flat({0.0});
  const KineticState st{{0.0}, {1.0}, 0.0, 0};
  auto [x, y] = conditional_mean_within_step(st, flat, ln2, ln2);
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-15));

  const auto p = make_cosine_well(1, 1, 2);
  const KineticState s2{{0.5, -1.0}, {0.3, 0.2}, 1.0, 1};
  KineticState stepped = s2;
  ZeroNoise zero;
  step_exact(stepped, *p, 1.0, 0.25, zero);
  auto [mx, my] = conditional_mean_within_step(s2, *p, 0.25, 0.25);
  for (int i = 0; i < 2; ++i) {
    CHECK(mx[i] == doctest::Approx(stepped.x[i]).epsilon(1e-15));
    CHECK(my[i] == doctest::Approx(stepped.y[i]).epsilon(1e-15));
  }

  const double t = 1e-6;
  auto [sx, sy] = conditional_mean_within_step(s2, *p, t, 0.25);
  const Vec g = p->gradient(s2.x);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(sx[i] - (s2.x[i] + t * s2.y[i])) < 1e-8);
    CHECK(std::abs(sy[i] - (s2.y[i] - t * (s2.y[i] + g[i]))) < 1e-8);
  }

  CHECK_THROWS_AS(conditional_mean_within_step(s2, *p, 0.0, 0.25), UsageError);
  CHECK_THROWS_AS(conditional_mean_within_step(s2, *p, 0.3, 0.25), UsageError);
}

TEST_CASE("clock bookkeeping and determinism") {
  const auto p = make_cosine_well(1, 1, 2);
  auto run = [&] {
    NormalSource rng(stream_seed(42, 3));
    ExactSecondOrderStepper stepper(2);
    KineticState st{{1.0, -1.0}, {0.0, 0.5}, 0.0, 0};
    long double sum = 0.0L;
    for (int k = 0; k < 10000; ++k) {
      const double dt = 0.01 + 0.001 * (k % 7);
      stepper.step(st, *p, 0.5, dt, rng);
      sum += dt;
    }
    CHECK(std::abs(st.T - static_cast<double>(sum)) <= 1e-12 * st.T);
    CHECK(st.k == 10000);
    return st;
  };
  const KineticState a = run(), b = run();
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}

TEST_CASE("non-finite states are rejected") {
  const auto p = make_quadratic(1);
  NormalSource rng(1);
  KineticState st{{std::numeric_limits<double>::quiet_NaN()}, {0.0}, 0.0, 0};
  CHECK_THROWS_AS(step_exact(st, *p, 1.0, 0.1, rng), NumericalError);
  KineticState bad{{0.0, 1.0}, {0.0}, 0.0, 0};
  const auto p2 = make_quadratic(2);
  CHECK_THROWS_AS(step_exact(bad, *p2, 1.0, 0.1, rng), UsageError);
  KineticState ok{{0.0}, {0.0}, 0.0, 0};
  CHECK_THROWS_AS(step_exact(ok, *p, 0.0, 0.1, rng), UsageError);
}

TEST_CASE("kernel names") {
  for (auto k : {KernelKind::exact_second_order, KernelKind::euler_kinetic, KernelKind::overdamped_euler}) {
    CHECK(parse_kernel(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_kernel("leapfrog"), UsageError);
}

}  // TEST_SUITE
