#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kanneal/potentials.hpp"

namespace kanneal {

/// Axis-aligned box sampled with `resolution` points per axis.
struct GridSpec {
  Vec lo;
  Vec hi;
  std::size_t resolution = 0;

  /// Throws UsageError unless lo < hi componentwise, resolution >= 3 and the
  /// box has `dims` axes.
  void validate(std::size_t dims) const;

  static GridSpec cube(std::size_t dims, double half_width, std::size_t resolution);
};

/// A box covering every local minimiser of `p` with one unit of margin:
/// 10^4 points per axis in 1D, 10^3 in 2D.
GridSpec default_depth_grid(const Potential& p);

struct LocalMinimum {
  Vec location;
  double value = 0.0;
};

struct DepthReport {
  double e_star = 0.0;          // refined: witness_barrier - U(witness_min)
  double grid_e_star = 0.0;     // bottleneck answer on the raw grid
  Vec witness_min;
  double witness_barrier = 0.0;
  Vec witness_saddle;
  std::vector<LocalMinimum> local_minima;
  std::vector<Vec> global_minima;
};

/// Grid points strictly below all axis neighbours, each refined by Newton /
/// gradient descent to |grad| <= 1e-10 and de-duplicated. Minima within 1e-8
/// of the lowest value are the global ones. Requires dims <= 2.
std::vector<LocalMinimum> local_minima_grid(const Potential& p, const GridSpec& grid);

/// Critical depth by node-valued minimax (bottleneck) Dijkstra on the grid
/// graph, run from the set of global minima, followed by a golden-section
/// refinement of the witness saddle along the path.
///
/// Throws ConstructionError when the grid shows no local minimum.
DepthReport critical_depth(const Potential& p, const GridSpec& grid);

/// R(x, y) = U(x) + |y|^2/2 + beta x.y, beta in (0, 1/2].
double lyapunov_R(std::span<const double> x, std::span<const double> y, const Potential& p,
                  double beta);

/// Smallest K >= 0 with (r/3)|x|^2 - K <= U(x) <= L|x|^2 + K on sampled points.
double fit_quadratic_growth_K(const Potential& p, double box_half_width, std::size_t samples,
                              std::uint64_t seed);

/// P(U(X) > delta) for X ~ exp(-U/eps) on the line.
///
/// The box is widened until U at both ends exceeds min U + 40 eps, the line
/// is split at the level crossings U = delta, and each piece is integrated by
/// composite Simpson. Throws AccuracyError when the Richardson error estimate
/// exceeds 1e-6.
double gibbs_exceedance_1d(const Potential& p, double eps, double delta, const GridSpec& grid);

}  // namespace kanneal
