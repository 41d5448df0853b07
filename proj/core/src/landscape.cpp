#include "kanneal/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

#include "kanneal/errors.hpp"

namespace kanneal {

void GridSpec::validate(std::size_t dims) const {
  if (lo.size() != dims || hi.size() != dims) throw UsageError("grid: box has wrong dimension");
  for (std::size_t i = 0; i < dims; ++i) {
    if (!(lo[i] < hi[i])) throw UsageError("grid: empty box (need lo < hi on every axis)");
  }
  if (resolution < 3) throw UsageError("grid: resolution must be >= 3");
}

GridSpec GridSpec::cube(std::size_t dims, double half_width, std::size_t resolution) {
  return {Vec(dims, -half_width), Vec(dims, half_width), resolution};
}

GridSpec default_depth_grid(const Potential& p) {
  const double w = p.minima_radius() + 1.0;
  return GridSpec::cube(p.dims(), w, p.dims() == 1 ? 10000 : 1000);
}

namespace {

constexpr double kGlobalTol = 1e-8;

// Node values and geometry of a 1D or 2D grid.
struct Lattice {
  std::size_t dims;
  std::size_t n;
  Vec lo;
  Vec step;
  std::vector<double> values;

  Lattice(const Potential& p, const GridSpec& g) : dims(p.dims()), n(g.resolution), lo(g.lo) {
    if (dims > 2) throw UsageError("grid landscape analysis supports dims <= 2");
    g.validate(dims);
    step.resize(dims);
    for (std::size_t a = 0; a < dims; ++a) step[a] = (g.hi[a] - g.lo[a]) / static_cast<double>(n - 1);
    values.resize(size());
    Vec x(dims);
    for (std::size_t idx = 0; idx < size(); ++idx) {
      position(idx, x);
      values[idx] = p.value(x);
    }
  }

  std::size_t size() const { return dims == 1 ? n : n * n; }

  void position(std::size_t idx, Vec& x) const {
    if (dims == 1) {
      x[0] = lo[0] + static_cast<double>(idx) * step[0];
    } else {
      x[0] = lo[0] + static_cast<double>(idx % n) * step[0];
      x[1] = lo[1] + static_cast<double>(idx / n) * step[1];
    }
  }

  Vec position(std::size_t idx) const {
    Vec x(dims);
    position(idx, x);
    return x;
  }

  // Axis neighbours; returns count written into `out`.
  std::size_t neighbours(std::size_t idx, std::size_t out[4]) const {
    std::size_t c = 0;
    if (dims == 1) {
      if (idx > 0) out[c++] = idx - 1;
      if (idx + 1 < n) out[c++] = idx + 1;
      return c;
    }
    const std::size_t i = idx % n;
    const std::size_t j = idx / n;
    if (i > 0) out[c++] = idx - 1;
    if (i + 1 < n) out[c++] = idx + 1;
    if (j > 0) out[c++] = idx - n;
    if (j + 1 < n) out[c++] = idx + n;
    return c;
  }

  bool interior(std::size_t idx) const {
    if (dims == 1) return idx > 0 && idx + 1 < n;
    const std::size_t i = idx % n;
    const std::size_t j = idx / n;
    return i > 0 && i + 1 < n && j > 0 && j + 1 < n;
  }

  // Strictly below neighbours with a lower index, not above those with a
  // higher one, so a pair of equal nodes straddling a minimum counts once.
  bool is_local_min(std::size_t idx) const {
    if (!interior(idx)) return false;
    std::size_t nb[4];
    const std::size_t c = neighbours(idx, nb);
    const double v = values[idx];
    for (std::size_t q = 0; q < c; ++q) {
      const double w = values[nb[q]];
      if (nb[q] < idx ? !(v < w) : !(v <= w)) return false;
    }
    return true;
  }
};

double norm(const Vec& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

// Damped Newton (gradient descent where the Hessian is unavailable or not
// positive definite) with Armijo backtracking.
Vec refine_minimum(const Potential& p, Vec x) {
  const std::size_t d = x.size();
  Vec g(d), trial(d), dir(d);
  for (int it = 0; it < 500; ++it) {
    p.gradient(x, g);
    if (norm(g) <= 1e-10) break;

    bool newton = false;
    if (p.has_hessian()) {
      const Eigen::MatrixXd h = p.hessian(x);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
          (ldlt.vectorD().array() > 0.0).all()) {
        const Eigen::VectorXd step =
            ldlt.solve(Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(d)));
        for (std::size_t i = 0; i < d; ++i) dir[i] = -step(static_cast<Eigen::Index>(i));
        newton = true;
      }
    }
    if (!newton) {
      for (std::size_t i = 0; i < d; ++i) dir[i] = -g[i];
    }

    double slope = 0.0;
    for (std::size_t i = 0; i < d; ++i) slope += g[i] * dir[i];
    const double u0 = p.value(x);
    double t = 1.0;
    bool moved = false;
    while (t > 1e-14) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = x[i] + t * dir[i];
      const double u1 = p.value(trial);
      if (u1 <= u0 + 1e-4 * t * slope || (newton && u1 <= u0)) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // Flat to rounding: a full Newton step is the best remaining estimate.
      if (newton) {
        for (std::size_t i = 0; i < d; ++i) trial[i] = x[i] + dir[i];
        Vec gt(d);
        p.gradient(trial, gt);
        if (norm(gt) < norm(g)) x = trial;
      }
      break;
    }
    x = trial;
  }
  return x;
}

struct GridMinima {
  std::vector<LocalMinimum> minima;
  std::vector<std::size_t> node;   // grid node of each detected minimum
  std::vector<std::size_t> owner;  // index into `minima` for each detected node
};

GridMinima find_minima(const Potential& p, const Lattice& lat) {
  GridMinima out;
  const double tol = 0.5 * *std::min_element(lat.step.begin(), lat.step.end());
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    if (!lat.is_local_min(idx)) continue;
    const Vec x = refine_minimum(p, lat.position(idx));
    const double v = p.value(x);
    std::size_t owner = out.minima.size();
    for (std::size_t q = 0; q < out.minima.size(); ++q) {
      Vec diff = x;
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= out.minima[q].location[i];
      if (norm(diff) < tol) {
        owner = q;
        break;
      }
    }
    if (owner == out.minima.size()) out.minima.push_back({x, v});
    out.node.push_back(idx);
    out.owner.push_back(owner);
  }
  return out;
}

double golden_max(const auto& f, double a, double b) {
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::vector<LocalMinimum> local_minima_grid(const Potential& p, const GridSpec& grid) {
  const Lattice lat(p, grid);
  return find_minima(p, lat).minima;
}

DepthReport critical_depth(const Potential& p, const GridSpec& grid) {
  const Lattice lat(p, grid);
  const GridMinima gm = find_minima(p, lat);
  if (gm.minima.empty()) throw ConstructionError("critical_depth: no local minimum on the grid");

  double vmin = std::numeric_limits<double>::infinity();
  for (const auto& m : gm.minima) vmin = std::min(vmin, m.value);

  DepthReport rep;
  rep.local_minima = gm.minima;
  std::vector<bool> is_global(gm.minima.size());
  for (std::size_t q = 0; q < gm.minima.size(); ++q) {
    is_global[q] = gm.minima[q].value - vmin <= kGlobalTol;
    if (is_global[q]) rep.global_minima.push_back(gm.minima[q].location);
  }

  // Bottleneck distances from the global minima: best[v] is the lowest
  // possible maximum node value over grid paths from any global minimum to v.
  const std::size_t N = lat.size();
  std::vector<double> best(N, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> pred(N, N);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t q = 0; q < gm.node.size(); ++q) {
    if (!is_global[gm.owner[q]]) continue;
    const std::size_t s = gm.node[q];
    best[s] = lat.values[s];
    heap.emplace(best[s], s);
  }
  while (!heap.empty()) {
    const auto [b, u] = heap.top();
    heap.pop();
    if (b > best[u]) continue;
    std::size_t nb[4];
    const std::size_t c = lat.neighbours(u, nb);
    for (std::size_t q = 0; q < c; ++q) {
      const std::size_t v = nb[q];
      const double cand = std::max(b, lat.values[v]);
      if (cand < best[v]) {
        best[v] = cand;
        pred[v] = u;
        heap.emplace(cand, v);
      }
    }
  }

  std::size_t witness = N;
  double grid_depth = 0.0;
  for (std::size_t q = 0; q < gm.node.size(); ++q) {
    if (is_global[gm.owner[q]]) continue;
    const std::size_t idx = gm.node[q];
    const double depth = best[idx] - lat.values[idx];
    if (witness == N || depth > grid_depth) {
      witness = idx;
      grid_depth = depth;
    }
  }

  if (witness == N) {
    rep.e_star = 0.0;
    rep.grid_e_star = 0.0;
    rep.witness_min = rep.global_minima.front();
    rep.witness_barrier = p.value(rep.witness_min);
    rep.witness_saddle = rep.witness_min;
    return rep;
  }
  rep.grid_e_star = grid_depth;

  std::size_t owner = 0;
  for (std::size_t q = 0; q < gm.node.size(); ++q) {
    if (gm.node[q] == witness) owner = gm.owner[q];
  }
  rep.witness_min = gm.minima[owner].location;

  // Walk the bottleneck path back to its source and take its highest node.
  std::vector<std::size_t> path{witness};
  while (pred[path.back()] != N) path.push_back(pred[path.back()]);
  std::size_t top = 0;
  for (std::size_t q = 1; q < path.size(); ++q) {
    if (lat.values[path[q]] > lat.values[path[top]]) top = q;
  }
  const std::size_t saddle = path[top];
  const std::size_t before = top > 0 ? path[top - 1] : path[top];
  const std::size_t after = top + 1 < path.size() ? path[top + 1] : path[top];

  const Vec centre = lat.position(saddle);
  Vec dir(lat.dims, 0.0);
  {
    const Vec pa = lat.position(before);
    const Vec pb = lat.position(after);
    for (std::size_t i = 0; i < lat.dims; ++i) dir[i] = pb[i] - pa[i];
    const double len = norm(dir);
    if (len > 0.0) {
      for (double& e : dir) e /= len;
    } else {
      dir[0] = 1.0;
    }
  }
  double h = 0.0;
  for (std::size_t i = 0; i < lat.dims; ++i) h = std::max(h, std::abs(dir[i]) * lat.step[i]);
  Vec probe(lat.dims);
  auto along = [&](double s) {
    for (std::size_t i = 0; i < lat.dims; ++i) probe[i] = centre[i] + s * dir[i];
    return p.value(probe);
  };
  const double s_star = golden_max(along, -h, h);
  double barrier = along(s_star);
  Vec saddle_pos = probe;
  if (barrier < lat.values[saddle]) {
    barrier = lat.values[saddle];
    saddle_pos = centre;
  }

  rep.witness_barrier = barrier;
  rep.witness_saddle = saddle_pos;
  rep.e_star = std::max(0.0, barrier - gm.minima[owner].value);
  return rep;
}

double lyapunov_R(std::span<const double> x, std::span<const double> y, const Potential& p,
                  double beta) {
  if (!(beta > 0.0 && beta <= 0.5)) throw UsageError("lyapunov_R: beta must lie in (0, 1/2]");
  if (y.size() != x.size()) throw UsageError("lyapunov_R: x and y lengths differ");
  double yy = 0.0, xy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    yy += y[i] * y[i];
    xy += x[i] * y[i];
  }
  return p.value(x) + 0.5 * yy + beta * xy;
}

double fit_quadratic_growth_K(const Potential& p, double box_half_width, std::size_t samples,
                              std::uint64_t seed) {
  if (samples == 0) throw UsageError("fit_quadratic_growth_K: samples must be >= 1");
  const auto& k = p.constants();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-box_half_width, box_half_width);
  Vec x(p.dims());
  double K = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double xx = 0.0;
    for (auto& xi : x) {
      xi = box(rng);
      xx += xi * xi;
    }
    const double u = p.value(x);
    K = std::max({K, k.r / 3.0 * xx - u, u - k.L * xx});
  }
  return K;
}

// --- Gibbs exceedance -------------------------------------------------------

namespace {

struct Simpson {
  double value;
  double error;
};

Simpson simpson(const auto& f, double a, double b, std::size_t n) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double odd = 0.0, even = 0.0, odd_half = 0.0;
  // Coarse rule on n/2 panels reuses the even nodes of the fine one.
  for (std::size_t i = 1; i < n; ++i) {
    const double v = f(a + static_cast<double>(i) * h);
    if (i % 2) odd += v; else even += v;
    if (i % 2 == 0) odd_half += (i % 4 == 2) ? v : 0.0;
  }
  const double fa = f(a), fb = f(b);
  const double fine = h / 3.0 * (fa + fb + 4.0 * odd + 2.0 * even);
  double coarse = fine;
  if (n % 4 == 0) {
    const double H = 2.0 * h;
    const double even_half = even - odd_half;
    coarse = H / 3.0 * (fa + fb + 4.0 * odd_half + 2.0 * even_half);
  }
  return {fine, std::abs(fine - coarse) / 15.0};
}

}  // namespace

double gibbs_exceedance_1d(const Potential& p, double eps, double delta, const GridSpec& grid) {
  if (p.dims() != 1) throw UsageError("gibbs_exceedance_1d: potential must be one-dimensional");
  if (!(eps > 0.0)) throw UsageError("gibbs_exceedance_1d: eps must be > 0");
  grid.validate(1);

  auto U = [&](double x) { return p.value(std::span<const double>(&x, 1)); };

  // Widen the box until both ends sit 40 eps above the minimum.
  double lo = grid.lo[0], hi = grid.hi[0];
  double umin = std::numeric_limits<double>::infinity();
  {
    const std::size_t n = grid.resolution;
    for (std::size_t i = 0; i < n; ++i) {
      umin = std::min(umin, U(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1)));
    }
  }
  const double centre = 0.5 * (lo + hi);
  for (int it = 0; it < 64 && U(lo) < umin + 40.0 * eps; ++it) lo = centre - 2.0 * (centre - lo);
  for (int it = 0; it < 64 && U(hi) < umin + 40.0 * eps; ++it) hi = centre + 2.0 * (hi - centre);

  // Split at the level crossings U = delta.
  const std::size_t n = std::max<std::size_t>(grid.resolution, 1000);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  std::vector<double> cuts{lo};
  double xa = lo;
  bool above = U(xa) > delta;
  for (std::size_t i = 1; i < n; ++i) {
    const double xb = lo + static_cast<double>(i) * h;
    const bool b_above = U(xb) > delta;
    if (b_above != above) {
      double a = xa, b = xb;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        if ((U(m) > delta) == above) a = m; else b = m;
      }
      cuts.push_back(0.5 * (a + b));
      above = b_above;
    }
    xa = xb;
  }
  cuts.push_back(hi);

  auto weight = [&](double x) { return std::exp(-(U(x) - umin) / eps); };
  double z = 0.0, z_err = 0.0, num = 0.0, num_err = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    if (!(b > a)) continue;
    const auto panels = static_cast<std::size_t>(
        4 * std::max<double>(64.0, std::ceil(static_cast<double>(n) * (b - a) / (hi - lo) / 4.0)));
    const Simpson part = simpson(weight, a, b, panels);
    z += part.value;
    z_err += part.error;
    if (U(0.5 * (a + b)) > delta) {
      num += part.value;
      num_err += part.error;
    }
  }
  if (!(z > 0.0)) throw AccuracyError("gibbs_exceedance_1d: vanishing normalisation");
  const double prob = num / z;
  const double err = (num_err + prob * z_err) / z;
  if (err > 1e-6) throw AccuracyError("gibbs_exceedance_1d: grid too coarse for 1e-6 accuracy");
  return std::clamp(prob, 0.0, 1.0);
}

}  // namespace kanneal
