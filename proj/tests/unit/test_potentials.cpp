#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kanneal/errors.hpp"
#include "kanneal/potentials.hpp"
#include "test_support.hpp"

using namespace kanneal;
using kanneal::testing::BareQuadratic;

namespace {

double cosine_1d(double A, double w, double x) { return 0.5 * x * x + A * (1.0 - std::cos(w * x)); }

std::vector<PotentialPtr> builtins() {
  return {make_quadratic(1), make_quadratic(3, 2.0), make_cosine_well(1, 1, 1),
          make_cosine_well(1, 1, 2), make_cosine_well(0.7, 3, 2), make_blended_double_well(0.3),
          make_blended_double_well(0.0), make_blended_double_well(-0.5, 3.0)};
}

}  // namespace

TEST_SUITE("potentials") {

TEST_CASE("cosine well values") {
  const auto p = make_cosine_well(1, 1, 1);
  const double zero[] = {0.0};
  const double pi[] = {std::numbers::pi};
  CHECK(p->value(zero) == 0.0);
  CHECK(p->value(pi) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2 + 2).epsilon(1e-14));
  CHECK(p->value(pi) == doctest::Approx(6.9348).epsilon(1e-4));
  CHECK(p->gradient(zero)[0] == 0.0);

  const auto q = make_cosine_well(1, 1, 2);
  const double origin[] = {0.0, 0.0};
  CHECK(q->value(origin) == 0.0);
}

TEST_CASE("cosine well is separable") {
  const auto p1 = make_cosine_well(1.3, 2.0, 1);
  const auto p3 = make_cosine_well(1.3, 2.0, 3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-7, 7);
  for (int i = 0; i < 1000; ++i) {
    const double x[] = {u(rng), u(rng), u(rng)};
    double sum = 0.0;
    for (double xi : x) sum += p1->value(std::span<const double>(&xi, 1));
    CHECK(p3->value(x) == sum);
    CHECK(p1->value(std::span<const double>(x, 1)) ==
          doctest::Approx(cosine_1d(1.3, 2.0, x[0])).epsilon(1e-14));
  }
}

TEST_CASE("quadratic gradient and hessian") {
  const auto p = make_quadratic(2);
  const double x[] = {3.0, -4.0};
  const Vec g = p->gradient(x);
  CHECK(g[0] == 3.0);
  CHECK(g[1] == -4.0);
  CHECK(p->value(x) == 12.5);
  REQUIRE(p->has_hessian());
  CHECK(p->hessian(x).isApprox(Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("cosine well hessian at the origin") {
  const auto p = make_cosine_well(1, 2, 1);
  const double x[] = {0.0};
  CHECK(p->hessian(x)(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("dimension mismatch and missing hessian") {
  const auto p = make_quadratic(2);
  const double x[] = {1.0};
  CHECK_THROWS_AS((void)p->value(x), UsageError);
  CHECK_THROWS_AS((void)p->gradient(x), UsageError);

  const BareQuadratic bare(1);
  CHECK_FALSE(bare.has_hessian());
  CHECK_THROWS_AS((void)bare.hessian(x), CapabilityError);
}

TEST_CASE("cosine well declared constants") {
  const auto& k = make_cosine_well(1, 1, 1)->constants();
  CHECK(k.L == 2.0);
  CHECK(k.r == 0.5);
  CHECK(k.m == 0.5);
  CHECK(k.L_hess == 1.0);

  // grad(x).x >= r x^2 - m on a fine grid over [-50, 50].
  const auto p = make_cosine_well(1, 1, 1);
  double worst = -1e300;
  for (int i = -500000; i <= 500000; ++i) {
    const double x = i * 1e-4;
    const double g = x + std::sin(x);
    worst = std::max(worst, 0.5 * x * x - 0.5 - g * x);
  }
  CHECK(worst <= 0.0);

  const auto& k2 = make_cosine_well(2, 3, 4)->constants();
  CHECK(k2.L == 19.0);
  CHECK(k2.m == doctest::Approx(4 * 4.0 * 9.0 / 2).epsilon(1e-15));
  CHECK(k2.L_hess == doctest::Approx(54.0).epsilon(1e-15));
}

TEST_CASE("cosine well with A = 0 is the quadratic") {
  const auto p = make_cosine_well(0, 1, 1);
  const auto& k = p->constants();
  REQUIRE(k.e_star.has_value());
  CHECK(*k.e_star == 0.0);
  const double x[] = {1.7};
  CHECK(p->value(x) == doctest::Approx(0.5 * 1.7 * 1.7).epsilon(1e-15));
  CHECK_THROWS_AS(make_cosine_well(-1, 1, 1), UsageError);
  CHECK_THROWS_AS(make_cosine_well(1, 0, 1), UsageError);
}

TEST_CASE("double well normalisation and global minimum") {
  for (double tilt : {0.3, 0.0, -0.3, 1.0}) {
    CAPTURE(tilt);
    const auto p = make_blended_double_well(tilt);
    const auto& k = p->constants();
    REQUIRE_FALSE(k.global_min_locations.empty());
    CHECK(p->value(k.global_min_locations[0]) <= 1e-10);

    double lo = 1e300;
    double argmin = 0.0;
    for (int i = -45000; i <= 45000; ++i) {
      const double x[] = {i * 1e-4};
      const double v = p->value(x);
      if (v < lo) {
        lo = v;
        argmin = x[0];
      }
    }
    CHECK(lo >= 0.0);
    CHECK(lo <= 1e-8);
    if (tilt > 0) CHECK(argmin > 0.0);
    if (tilt < 0) CHECK(argmin < 0.0);
  }
}

TEST_CASE("double well tilt sign picks the global well") {
  const auto p = make_blended_double_well(0.3);
  const auto& g = p->constants().global_min_locations;
  REQUIRE(g.size() == 1);
  CHECK(g[0][0] == doctest::Approx(1.0).epsilon(0.1));
  const auto q = make_blended_double_well(-0.3);
  CHECK(q->constants().global_min_locations[0][0] == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("double well with tilt 0 has two global minima and zero depth") {
  const auto p = make_blended_double_well(0.0);
  CHECK(p->constants().global_min_locations.size() == 2);
  REQUIRE(p->constants().e_star.has_value());
  CHECK(*p->constants().e_star == 0.0);
}

TEST_CASE("double well is C2 across the blend") {
  const auto p = make_blended_double_well(0.3, 2.5);
  const double h = 1e-4;
  auto d2 = [&](double x) {
    const double a[] = {x - h}, b[] = {x + h};
    return (p->gradient(b)[0] - p->gradient(a)[0]) / (2 * h);
  };
  for (double s : {2.5, 3.5, -2.5, -3.5}) {
    CAPTURE(s);
    const double eps = 1e-10;
    const double l[] = {s - eps}, r[] = {s + eps};
    CHECK(p->value(l) == doctest::Approx(p->value(r)).epsilon(1e-9));
    CHECK(p->gradient(l)[0] == doctest::Approx(p->gradient(r)[0]).epsilon(1e-6));
    CHECK(d2(s - 10 * h) == doctest::Approx(d2(s + 10 * h)).epsilon(0.01));
  }
}

TEST_CASE("double well needs two minima") {
  CHECK_THROWS_AS(make_blended_double_well(2.0), ConstructionError);
  CHECK_THROWS_AS(make_blended_double_well(0.3, 1.5), UsageError);
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(11);
  for (const auto& p : builtins()) {
    CAPTURE(p->family());
    const double w = p->minima_radius() + 3;
    std::uniform_real_distribution<double> u(-w, w);
    for (int s = 0; s < 10000 / 8; ++s) {
      Vec x(p->dims());
      for (auto& v : x) v = u(rng);
      const Vec g = p->gradient(x);
      const Eigen::MatrixXd H = p->hessian(x);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = 1e-5;
        Vec a = x, b = x;
        a[i] -= h;
        b[i] += h;
        const double fd = (p->value(b) - p->value(a)) / (2 * h);
        CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
        const Vec ga = p->gradient(a), gb = p->gradient(b);
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double fdh = (gb[j] - ga[j]) / (2 * h);
          const auto jj = static_cast<Eigen::Index>(j), ii = static_cast<Eigen::Index>(i);
          CHECK(std::abs(fdh - H(jj, ii)) <= 1e-5 * std::max(1.0, std::abs(fdh)));
        }
      }
    }
  }
}

TEST_CASE("declared constants survive sampling") {
  for (const auto& p : builtins()) {
    CAPTURE(p->family());
    CAPTURE(p->dims());
    const ConstantsReport rep = check_assumption_constants(*p, 50.0, 100000, 3);
    CHECK(rep.samples == 100000);
    CHECK(rep.min_value >= 0.0);
    CHECK(rep.hessian_checked);
    CHECK(rep.violation_count() == 0);
  }
}

TEST_CASE("under-declared constants are reported") {
  AssumptionConstants k = make_cosine_well(1, 1, 1)->constants();
  k.L = 1.0;
  const auto liar = with_declared_constants(make_cosine_well(1, 1, 1), k);
  const ConstantsReport rep = check_assumption_constants(*liar, 10.0, 20000, 1);
  CHECK(rep.lipschitz_violated);
  CHECK_FALSE(rep.ok());

  AssumptionConstants k2 = make_quadratic(1)->constants();
  k2.m = 0.0;
  k2.r = 2.0;
  const auto liar2 = with_declared_constants(make_quadratic(1), k2);
  CHECK(check_assumption_constants(*liar2, 10.0, 2000, 1).dissipativity_violated);
}

TEST_CASE("scaled potential") {
  const auto base = make_blended_double_well(0.3);
  const auto p = make_scaled(base, 2.0);
  const double x[] = {0.4};
  CHECK(p->value(x) == doctest::Approx(2 * base->value(x)).epsilon(1e-15));
  CHECK(p->gradient(x)[0] == doctest::Approx(2 * base->gradient(x)[0]).epsilon(1e-15));
  CHECK(*p->constants().e_star == doctest::Approx(2 * *base->constants().e_star).epsilon(1e-15));
  CHECK(check_assumption_constants(*p, 20.0, 20000, 2).ok());
  CHECK_THROWS_AS(make_scaled(base, 0.0), UsageError);
}

TEST_CASE("registry") {
  const auto fams = registered_families();
  CHECK(fams == std::vector<std::string>{"blended_double_well", "cosine_well", "quadratic"});
  const auto params = family_parameters("cosine_well");
  REQUIRE(params.size() == 2);

  const PotentialSpec spec = canonical_spec({"cosine_well", 2, {{"A", 0.5}}});
  CHECK(spec.params.at("A") == 0.5);
  CHECK(spec.params.at("omega") == 1.0);

  CHECK_THROWS_AS(canonical_spec({"nope", 1, {}}), UsageError);
  CHECK_THROWS_AS(canonical_spec({"quadratic", 1, {{"A", 1.0}}}), UsageError);
  CHECK_THROWS_AS(canonical_spec({"blended_double_well", 2, {}}), UsageError);
  CHECK_THROWS_AS(canonical_spec({"quadratic", 0, {}}), UsageError);

  const auto p = make_potential({"blended_double_well", 1, {{"tilt", 0.3}}});
  CHECK(p->family() == "blended_double_well");
}

TEST_CASE("assumption constants validation") {
  AssumptionConstants k;
  CHECK_NOTHROW(k.validate());
  k.L = 0.5;
  CHECK_THROWS_AS(k.validate(), UsageError);
  k = {};
  k.r = 0.0;
  CHECK_THROWS_AS(k.validate(), UsageError);
  k = {};
  k.e_star = -1.0;
  CHECK_THROWS_AS(k.validate(), UsageError);
}

}  // TEST_SUITE
