#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace kanneal {

using Vec = std::vector<double>;

/// Growth and regularity constants a potential declares about itself.
///
/// `L` bounds the Lipschitz constant of the gradient, `(r, m)` give the
/// dissipativity bound grad(x).x >= r|x|^2 - m, and `L_hess` bounds the
/// Lipschitz constant of the Hessian in Frobenius norm. By convention L >= 1.
struct AssumptionConstants {
  double L = 1.0;
  double r = 1.0;
  double m = 0.0;
  double L_hess = 0.0;
  std::optional<double> e_star;
  std::vector<Vec> global_min_locations;

  /// Throws UsageError when an invariant (L >= 1, r > 0, m >= 0, ...) fails.
  void validate() const;
};

/// A smooth energy U: R^d -> [0, inf) with min U = 0.
///
/// Potentials are immutable once built and are shared between replicas via
/// `std::shared_ptr<const Potential>`.
class Potential {
 public:
  virtual ~Potential() = default;

  Potential(const Potential&) = delete;
  Potential& operator=(const Potential&) = delete;

  [[nodiscard]] virtual std::string_view family() const = 0;
  [[nodiscard]] std::size_t dims() const noexcept { return dims_; }
  [[nodiscard]] const AssumptionConstants& constants() const noexcept { return constants_; }

  [[nodiscard]] double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  [[nodiscard]] Vec gradient(std::span<const double> x) const;

  [[nodiscard]] virtual bool has_hessian() const noexcept { return false; }
  /// Throws CapabilityError when the potential has no second derivatives.
  [[nodiscard]] Eigen::MatrixXd hessian(std::span<const double> x) const;

  /// Every local minimiser lies in the box [-R, R]^d for the returned R.
  [[nodiscard]] virtual double minima_radius() const = 0;

 protected:
  Potential(std::size_t dims, AssumptionConstants constants);

  virtual double do_value(std::span<const double> x) const = 0;
  virtual void do_gradient(std::span<const double> x, std::span<double> out) const = 0;
  virtual Eigen::MatrixXd do_hessian(std::span<const double> x) const;

  void set_constants(AssumptionConstants constants);

 private:
  void check_dims(std::size_t n) const;

  std::size_t dims_;
  AssumptionConstants constants_;
};

using PotentialPtr = std::shared_ptr<const Potential>;

/// U(x) = curvature * |x|^2 / 2.
PotentialPtr make_quadratic(std::size_t dims, double curvature = 1.0);

/// U(x) = sum_i x_i^2/2 + A (1 - cos(omega x_i)).
///
/// Declared constants: L = max(1, 1 + A omega^2), r = 1/2,
/// m = d A^2 omega^2 / 2, L_hess = A omega^3.
PotentialPtr make_cosine_well(double A, double omega, std::size_t dims);

/// One-dimensional tilted double well.
///
/// The core (x^2 - 1)^2 - tilt*x holds on |x| <= splice_radius; over the
/// next unit of width it is blended with a quintic smoothstep into the
/// second-order Taylor polynomial of the core at +-splice_radius, which then
/// continues as a quadratic tail. The result is C^2 with globally Lipschitz
/// gradient and Hessian. Positive tilt makes the well near x = +1 global.
/// An additive offset makes the global minimum exactly 0. L, L_hess and m are
/// estimated on a dense grid and inflated by 10%; r = 1; E_* comes from a
/// dense 1D barrier scan.
///
/// Throws ConstructionError when fewer than two local minima survive.
PotentialPtr make_blended_double_well(double tilt, double splice_radius = 2.5);

/// c * U for c > 0, with constants rescaled accordingly.
PotentialPtr make_scaled(PotentialPtr base, double c);

/// Same energy as `base` but reporting `constants` instead of its own.
/// Mostly useful for negative controls of the constant checker.
PotentialPtr with_declared_constants(PotentialPtr base, AssumptionConstants constants);

// --- registry ---------------------------------------------------------------

struct PotentialSpec {
  std::string family;
  std::size_t dims = 1;
  std::map<std::string, double> params;
};

struct ParameterInfo {
  std::string name;
  double default_value;
};

/// "quadratic", "cosine_well", "blended_double_well".
std::vector<std::string> registered_families();

/// Parameters accepted by `family`, with defaults. Throws UsageError for an
/// unknown family.
std::vector<ParameterInfo> family_parameters(std::string_view family);

/// Fills in defaults and rejects unknown families or parameters.
PotentialSpec canonical_spec(const PotentialSpec& spec);

PotentialPtr make_potential(const PotentialSpec& spec);

// --- empirical constant check -----------------------------------------------

struct ConstantsReport {
  std::size_t samples = 0;
  double min_value = 0.0;
  double max_gradient_ratio = 0.0;     // sup |g(a)-g(b)| / |a-b|
  double max_dissipativity_gap = 0.0;  // sup r|x|^2 - m - g(x).x
  double max_hessian_ratio = 0.0;      // sup ||H(a)-H(b)||_F / |a-b|
  bool hessian_checked = false;

  bool nonnegative_violated = false;
  bool lipschitz_violated = false;
  bool dissipativity_violated = false;
  bool hessian_lipschitz_violated = false;

  [[nodiscard]] std::size_t violation_count() const noexcept;
  [[nodiscard]] bool ok() const noexcept { return violation_count() == 0; }
};

/// Samples `samples` point pairs in [-w, w]^d and compares the worst observed
/// ratios against the declared constants, with 1e-9 slack.
ConstantsReport check_assumption_constants(const Potential& p, double box_half_width,
                                           std::size_t samples, std::uint64_t seed);

}  // namespace kanneal
