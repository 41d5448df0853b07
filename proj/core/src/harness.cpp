#include "kanneal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>
#include <type_traits>

#include "kanneal/config.hpp"
#include "kanneal/landscape.hpp"
#include "kanneal/rng.hpp"

namespace kanneal {

DivergedError::DivergedError(const std::string& what, std::uint64_t replica, std::uint64_t k,
                             double T)
    : NumericalError(what), replica_(replica), k_(k), T_(T) {}

EnsembleFailedError::EnsembleFailedError(const std::string& what,
                                         std::vector<DivergenceRecord> divergences)
    : std::runtime_error(what), divergences_(std::move(divergences)) {}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

[[noreturn]] void diverge(const std::string& what, std::uint64_t index, std::uint64_t k, double T) {
  throw DivergedError("replica " + std::to_string(index) + ": " + what, index, k, T);
}

template <class Stepper, class State>
Trajectory drive(const RunConfig& cfg, const Potential& p, std::uint64_t index, State st,
                 NormalSource& noise) {
  const CoolingSchedule cooling = cooling_of(cfg);
  const StepSchedule steps = steps_of(cfg, p);
  const double beta = beta_tilde(p.constants().r);
  constexpr bool kinetic = std::is_same_v<State, KineticState>;
  Stepper stepper(p.dims());

  Trajectory out;
  out.checkpoints.reserve(cfg.checkpoints.size());
  std::size_t next = 0;
  while (st.T < cfg.horizon) {
    const double eps = cooling.epsilon_at(st.T);
    const double dt = steps.next_step(st.k, st.T);
    try {
      stepper.step(st, p, eps, dt, noise);
    } catch (const NumericalError& e) {
      diverge(e.what(), index, st.k, st.T);
    }
    bool finite = detail::all_finite(st.x) && std::isfinite(st.T);
    if constexpr (kinetic) finite = finite && detail::all_finite(st.y);
    if (!finite) diverge("non-finite state", index, st.k, st.T);

    while (next < cfg.checkpoints.size() && st.T >= cfg.checkpoints[next]) {
      CheckpointRecord rec;
      rec.T = st.T;
      rec.U = p.value(st.x);
      if constexpr (kinetic) {
        rec.speed_sq = dot(st.y, st.y);
        rec.R = rec.U + 0.5 * rec.speed_sq + beta * dot(st.x, st.y);
      } else {
        rec.R = rec.U;
      }
      if (!std::isfinite(rec.U) || !std::isfinite(rec.R)) {
        diverge("non-finite checkpoint value", index, st.k, st.T);
      }
      out.checkpoints.push_back(rec);
      ++next;
    }
  }
  return out;
}

}  // namespace

Trajectory run_replica(const RunConfig& cfg, const Potential& p, std::uint64_t index) {
  cfg.validate();
  if (p.dims() != cfg.potential.dims) {
    throw UsageError("potential has " + std::to_string(p.dims()) + " dims, config says " +
                     std::to_string(cfg.potential.dims));
  }
  NormalSource noise(stream_seed(cfg.base_seed, index));
  const std::size_t d = p.dims();
  Vec x(d), y(d);
  for (auto& v : x) v = cfg.init.x_sigma * noise();
  for (auto& v : y) v = cfg.init.y_sigma * noise();

  switch (cfg.kernel) {
    case KernelKind::exact_second_order:
      return drive<ExactSecondOrderStepper>(cfg, p, index, KineticState{x, y, 0.0, 0}, noise);
    case KernelKind::euler_kinetic:
      return drive<EulerKineticStepper>(cfg, p, index, KineticState{x, y, 0.0, 0}, noise);
    case KernelKind::overdamped_euler:
      return drive<OverdampedStepper>(cfg, p, index, OverdampedState{x, 0.0, 0}, noise);
  }
  throw UsageError("unknown kernel");
}

Trajectory run_replica(const RunConfig& cfg, std::uint64_t index) {
  return run_replica(cfg, *make_potential(cfg.potential), index);
}

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw UsageError("wilson_interval: n must be >= 1");
  if (successes > n) throw UsageError("wilson_interval: successes exceed trials");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  Interval ci{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  // Rounding can push an endpoint past p at the boundaries.
  ci.lo = std::min(ci.lo, p);
  ci.hi = std::max(ci.hi, p);
  if (successes == 0) ci.lo = 0.0;
  if (successes == n) ci.hi = 1.0;
  return ci;
}

std::pair<std::optional<double>, std::string> resolve_e_star(const Potential& p) {
  if (p.constants().e_star) return {p.constants().e_star, "declared"};
  if (p.dims() <= 2) {
    try {
      return {critical_depth(p, default_depth_grid(p)).e_star, "landscape"};
    } catch (const ConstructionError&) {
    }
  }
  return {std::nullopt, "unavailable"};
}

EnsembleResult run_ensemble(const RunConfig& cfg, const EnsembleOptions& opts) {
  cfg.validate();
  return run_ensemble(cfg, make_potential(cfg.potential), opts);
}

EnsembleResult run_ensemble(const RunConfig& cfg, PotentialPtr p, const EnsembleOptions& opts) {
  cfg.validate();
  if (!p) throw UsageError("run_ensemble: null potential");
  steps_of(cfg, *p);  // surfaces cap errors before any worker starts

  const std::size_t n = cfg.replicas;
  std::vector<std::optional<Trajectory>> trajectories(n);
  std::vector<std::optional<DivergenceRecord>> failures(n);
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        trajectories[i] = run_replica(cfg, *p, i);
      } catch (const DivergedError& e) {
        failures[i] = DivergenceRecord{i, e.step(), e.time(), e.what()};
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        cursor.store(n);
        return;
      }
    }
  };

  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::size_t>(std::max(1u, opts.threads), 1, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  EnsembleResult res;
  res.config_hash = config_hash(cfg);
  res.replicas = n;
  res.delta = cfg.delta;
  res.E = cfg.E;
  std::tie(res.e_star, res.e_star_source) = resolve_e_star(*p);
  for (auto& f : failures) {
    if (f) res.divergences.push_back(std::move(*f));
  }
  // Tolerated only while strictly fewer than 1% of replicas diverge.
  if (!res.divergences.empty() && res.divergences.size() * 100 >= n) {
    throw EnsembleFailedError(std::to_string(res.divergences.size()) + " of " +
                                  std::to_string(n) + " replicas diverged; first: " +
                                  res.divergences.front().message,
                              res.divergences);
  }
  res.used = n - res.divergences.size();
  if (res.used == 0) {
    throw EnsembleFailedError("no replica finished", res.divergences);
  }

  const double used = static_cast<double>(res.used);
  for (std::size_t j = 0; j < cfg.checkpoints.size(); ++j) {
    std::size_t hits = 0;
    double sum_u = 0.0, sum_v = 0.0, sum_r = 0.0;
    for (const auto& t : trajectories) {
      if (!t) continue;
      const auto& rec = t->checkpoints[j];
      if (rec.U > cfg.delta) ++hits;
      sum_u += rec.U;
      sum_v += rec.speed_sq;
      sum_r += rec.R;
    }
    const Interval ci = wilson_interval(hits, res.used);
    res.checkpoints.push_back(CheckpointStats{cfg.checkpoints[j], static_cast<double>(hits) / used,
                                              ci.lo, ci.hi, sum_u / used, sum_v / used,
                                              sum_r / used});
  }
  return res;
}

std::string ensemble_csv(const EnsembleResult& res) {
  std::string out = "checkpoint_T,p_hat,ci_lo,ci_hi,mean_U,mean_speed_sq,mean_R\n";
  for (const auto& c : res.checkpoints) {
    for (double v : {c.T, c.p_hat, c.ci_lo, c.ci_hi, c.mean_U, c.mean_speed_sq}) {
      out += format_fixed17(v);
      out += ',';
    }
    out += format_fixed17(c.mean_R);
    out += '\n';
  }
  return out;
}

double theoretical_exponent(double delta, double E, double E_star) {
  if (!(delta > 0.0)) throw UsageError("theoretical_exponent: delta must be > 0");
  if (!(E_star >= 0.0)) throw UsageError("theoretical_exponent: E_star must be >= 0");
  if (!(E > E_star)) {
    throw UsageError("theoretical_exponent: E = " + format_shortest(E) +
                     " does not exceed the critical depth " + format_shortest(E_star));
  }
  return std::min(delta / E, 0.5 * (1.0 - E_star / E));
}

RateEstimate fit_loglog(std::span<const double> T, std::span<const double> p,
                        std::pair<double, double> window) {
  if (T.size() != p.size()) throw UsageError("fit_loglog: T and p differ in length");
  const double lo = window.first * (1.0 - 1e-12);
  const double hi = window.second * (1.0 + 1e-12);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (T[i] < lo || T[i] > hi) continue;
    if (!(p[i] > 0.0) || !(p[i] < 1.0)) continue;
    lx.push_back(std::log(T[i]));
    ly.push_back(std::log(p[i]));
  }
  if (lx.size() < 3) {
    throw InsufficientDataError("rate fit needs at least 3 checkpoints with 0 < p_hat < 1 in [" +
                                format_shortest(window.first) + ", " +
                                format_shortest(window.second) + "], found " +
                                std::to_string(lx.size()));
  }
  const double k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  RateEstimate est;
  est.fitted_slope = sxy / sxx;
  est.intercept = my - est.fitted_slope * mx;
  est.window = window;
  est.points = lx.size();
  return est;
}

RateEstimate fit_rate(const EnsembleResult& res, std::pair<double, double> window) {
  std::vector<double> T, p;
  for (const auto& c : res.checkpoints) {
    T.push_back(c.T);
    p.push_back(c.p_hat);
  }
  RateEstimate est = fit_loglog(T, p, window);
  if (res.e_star && res.E > *res.e_star) {
    est.theoretical_exponent = theoretical_exponent(res.delta, res.E, *res.e_star);
  }
  return est;
}

std::vector<KernelRow> compare_kernels(const RunConfig& cfg, std::span<const KernelKind> kernels,
                                       const EnsembleOptions& opts) {
  if (kernels.size() < 2) throw UsageError("compare_kernels: need at least two kernels");
  cfg.validate();
  const PotentialPtr p = make_potential(cfg.potential);
  std::vector<KernelRow> rows;
  for (KernelKind k : kernels) {
    RunConfig c = cfg;
    c.kernel = k;
    rows.push_back(KernelRow{k, run_ensemble(c, p, opts)});
  }
  return rows;
}

std::string comparison_csv(std::span<const KernelRow> rows) {
  std::string out = "kernel,checkpoint_T,p_hat,ci_lo,ci_hi,mean_U,mean_speed_sq,mean_R\n";
  for (const auto& row : rows) {
    const std::string csv = ensemble_csv(row.result);
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
      const std::size_t eol = csv.find('\n', pos);
      out += to_string(row.kernel);
      out += ',';
      out.append(csv, pos, eol - pos + 1);
      pos = eol + 1;
    }
  }
  return out;
}

}  // namespace kanneal
