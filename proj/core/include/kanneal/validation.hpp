#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kanneal/kernel.hpp"

namespace kanneal {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(std::size_t n);

/// Increment covariance obtained by integrating the Ito isometry integrands
/// 2 eps (1 - e^{-u})^2, 2 eps (1 - e^{-u}) e^{-u}, 2 eps e^{-2u} over
/// [0, dt] with a 32-point Gauss-Legendre rule.
NoiseCov noise_cov_quadrature(double eps, double dt);

/// Per-coordinate stationary covariance of the exact scheme on
/// U = curvature |x|^2 / 2 at frozen (eps, dt): the fixed point of the
/// discrete Lyapunov equation S = A S A^T + Q.
NoiseCov stationary_covariance_oracle(double eps, double dt, double curvature = 1.0);

struct CovarianceEstimate {
  NoiseCov mean;
  NoiseCov standard_error;  // batch means
  std::size_t samples = 0;
};

/// Runs the exact kernel on U = |x|^2/2 in one dimension for `steps` steps
/// after `burn_in`, and estimates Cov(x, y) with batch-means errors.
CovarianceEstimate empirical_stationary_covariance(double eps, double dt, std::uint64_t steps,
                                                   std::uint64_t burn_in, std::size_t batches,
                                                   std::uint64_t seed);

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

using CovarianceFn = std::function<NoiseCov(double eps, double dt)>;

struct ValidationOptions {
  double min_dt = 1e-8;
  std::uint64_t lyapunov_steps = 1'000'000;
  std::uint64_t seed = 20240917;
  CovarianceFn covariance = noise_cov;  // replaceable for fault injection
};

/// noise_cov with the sign of s12 flipped; a negative control.
NoiseCov noise_cov_s12_flipped(double eps, double dt);

/// The property suite: covariance PSD grid with quadrature agreement,
/// small-step asymptotics, finite-difference derivative checks, declared
/// constants, and the quadratic-potential stationary covariance.
std::vector<PropertyResult> run_validation(const ValidationOptions& opts = {});

}  // namespace kanneal
