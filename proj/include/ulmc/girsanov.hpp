#pragma once

// Path-measure machinery: Monte-Carlo estimation of the exponential drift-gap
// functional whose log-mean-exp upper-bounds the Renyi divergence between the
// interpolated-chain path measure and the diffusion path measure, plus
// empirical validators for the supporting tail and movement inequalities.
//
// Simulation scheme: within one step window of length h the chain's gradient
// is frozen at the window-start position, so the interpolating SDE is an
// Ornstein-Uhlenbeck process that can be advanced *exactly* on a substep grid
// of spacing h/M. Noise is keyed by (seed, path index, absolute substep
// index), which makes runs with equal substep spacing but different window
// lengths pathwise coupled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <ulmc/errors.hpp>
#include <ulmc/integrator.hpp>
#include <ulmc/linalg.hpp>
#include <ulmc/parallel.hpp>
#include <ulmc/rng.hpp>
#include <ulmc/schedules.hpp>
#include <ulmc/targets.hpp>
#include <ulmc/types.hpp>

namespace ulmc {

/// Per-path functionals of the interpolated process: the time integral of the
/// squared drift gap and the per-window supremum of the position increment.
template <class S>
struct PathStatistic {
  Vec<S> drift_gap_integral;  // one entry per path
  Mat<S> sup_increment;       // paths x windows
  int substeps = 0;
  S gamma = S(0);
  S h = S(0);
  S T = S(0);
  std::uint64_t seed = 0;
  std::int64_t n_windows = 0;

  Eigen::Index paths() const { return drift_gap_integral.size(); }
};

namespace detail {

template <class S>
std::int64_t window_count(S h, S T) {
  if (!(h > S(0)) || !(T > S(0)))
    throw DomainError("interpolated pair: h and T must be positive");
  const std::int64_t n = std::llround(double(T / h));
  if (n < 1 || std::abs(S(n) * h - T) > S(1e-9) * std::max(S(1), T))
    throw DomainError("interpolated pair: T must be a whole number of steps");
  return n;
}

}  // namespace detail

/// Simulate `paths` independent interpolated trajectories over [0, T] with
/// window length h and M exact OU substeps per window. Records the
/// trapezoidal quadrature of ||grad U(x_t) - grad U(x_window)||^2 (the
/// integrand vanishes at window starts) and the per-window position sup.
/// Default initialization: the product law with beta = min(1, gamma/T).
template <class S>
PathStatistic<S> simulate_interpolated_pair(
    const Target<S>& target, S gamma, S h, S T, int substeps, std::uint64_t seed,
    Eigen::Index paths, const std::optional<GaussianLaw<S>>& init = {},
    int n_threads = 1) {
  if (substeps < 8) throw DomainError("interpolated pair: need at least 8 substeps");
  if (paths < 1) throw DomainError("interpolated pair: need at least one path");
  const std::int64_t windows = detail::window_count(h, T);
  const Eigen::Index d = target.dim();

  GaussianLaw<S> law;
  if (init) {
    law = *init;
    if (law.dim() != d) throw DimensionError("interpolated pair: init dimension");
  } else {
    const S L = target.constants().L;
    law = initialization<S>(L > S(0) ? L : S(1), std::min(S(1), gamma / T), d);
  }
  Mat<S> factor;
  try {
    factor = cholesky_spd<S>(symmetrized<S>(law.cov), "interpolated pair init");
  } catch (const SingularMatrixError&) {
    factor = sqrt_psd<S>(symmetrized<S>(law.cov));
  }

  const S delta = h / S(substeps);
  const auto sc = step_coefficients<S>(gamma, delta);
  const S l11 = sc.chol(0, 0), l21 = sc.chol(1, 0), l22 = sc.chol(1, 1);

  PathStatistic<S> stats;
  stats.drift_gap_integral = Vec<S>::Zero(paths);
  stats.sup_increment = Mat<S>::Zero(paths, windows);
  stats.substeps = substeps;
  stats.gamma = gamma;
  stats.h = h;
  stats.T = T;
  stats.seed = seed;
  stats.n_windows = windows;

  parallel_for(paths, n_threads, [&](Eigen::Index lo, Eigen::Index hi) {
    Vec<S> z(2 * d), x(d), v(d), g(d), x0(d), xw(d);
    for (Eigen::Index p = lo; p < hi; ++p) {
      CounterRng rng(seed, std::uint32_t(p));
      rng.template fill_normal<S>(0, z);
      x0 = law.mean + factor * z;
      x = x0.head(d);
      v = x0.tail(d);
      S integral = S(0);
      for (std::int64_t w = 0; w < windows; ++w) {
        g = target.gradient(x);
        xw = x;
        S f_prev = S(0);
        S sup = S(0);
        for (int m = 0; m < substeps; ++m) {
          const std::uint64_t idx = std::uint64_t(w) * substeps + m + 1;
          rng.template fill_normal<S>(idx, z);
          const auto z1 = z.head(d), z2 = z.tail(d);
          const Vec<S> xn = x + sc.c_xv * v - sc.c_xg * g + l11 * z1;
          v = sc.eta * v - sc.c_vg * g + l21 * z1 + l22 * z2;
          x = xn;
          const S f = (target.gradient(x) - g).squaredNorm();
          integral += delta * (f_prev + f) / 2;
          f_prev = f;
          sup = std::max(sup, S((x - xw).norm()));
        }
        if (!x.allFinite() || !v.allFinite() || !std::isfinite(integral)) {
          std::ostringstream msg;
          msg << "interpolated pair diverged on path " << p << ", window " << w;
          throw NumericsError(msg.str());
        }
        stats.sup_increment(p, w) = sup;
      }
      stats.drift_gap_integral[p] = integral;
    }
  });
  return stats;
}

/// Outcome of the exponential-moment estimator. `value` is the log-mean-exp
/// of (4 q^2 / gamma) * drift_gap_integral; [lo, hi] is a 90% bootstrap
/// interval (200 deterministic resamples). When the exponent would overflow,
/// `overflow` is set, `value` is +infinity, and `diagnostic_quantile` carries
/// the 0.99 quantile of the exponent for error reporting.
template <class S>
struct PathBoundReport {
  S value = S(0);
  S lo = S(0);
  S hi = S(0);
  bool overflow = false;
  S diagnostic_quantile = S(0);
};

namespace detail {

template <class S>
S log_mean_exp(const std::vector<S>& a) {
  S amax = -std::numeric_limits<S>::infinity();
  for (S x : a) amax = std::max(amax, x);
  S acc = S(0);
  for (S x : a) acc += std::exp(x - amax);
  return amax + std::log(acc / S(a.size()));
}

}  // namespace detail

/// Log-mean-exp upper bound for the order-2q Renyi divergence between the
/// interpolated-chain path law and the diffusion path law.
template <class S>
PathBoundReport<S> renyi_path_bound(const PathStatistic<S>& stats, S q, S gamma) {
  const Eigen::Index n = stats.paths();
  if (n < 100) throw DomainError("renyi_path_bound: need at least 100 paths");
  if (!(q >= S(1))) throw DomainError("renyi_path_bound: order q must be >= 1");
  if (!(gamma > S(0))) throw DomainError("renyi_path_bound: gamma must be positive");

  const S scale = 4 * q * q / gamma;
  std::vector<S> a(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) a[std::size_t(i)] = scale * stats.drift_gap_integral[i];

  PathBoundReport<S> rep;
  const S amax = *std::max_element(a.begin(), a.end());
  if (amax > S(700)) {
    std::vector<S> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    rep.value = std::numeric_limits<S>::infinity();
    rep.lo = rep.hi = rep.value;
    rep.overflow = true;
    rep.diagnostic_quantile = sorted[std::size_t(0.99 * double(n - 1))];
    return rep;
  }
  rep.value = detail::log_mean_exp(a);

  const int B = 200;
  std::vector<S> boot(B);
  std::vector<S> resample(static_cast<std::size_t>(n));
  for (int b = 0; b < B; ++b) {
    CounterRng rng(stats.seed ^ 0x9E3779B97F4A7C15ull, std::uint32_t(b));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = rng.uniform(std::uint64_t(i), 0);
      const auto j = std::min<Eigen::Index>(n - 1, Eigen::Index(u * double(n)));
      resample[std::size_t(i)] = a[std::size_t(j)];
    }
    boot[std::size_t(b)] = detail::log_mean_exp(resample);
  }
  std::sort(boot.begin(), boot.end());
  rep.lo = boot[std::size_t(0.05 * B)];
  rep.hi = boot[std::size_t(0.95 * B) - 1];
  return rep;
}

/// Empirical check of the running-maximum tail bound
///   P(sup_{t<=h} ||B_t|| >= eta) <= 3 exp(-eta^2 / (6 d h))
/// on the bound-level grid p in {3, 1, 0.3, 0.1, 0.03, 0.01}, where
/// eta(p) = sqrt(6 d h log(3/p)). The supremum is sampled on 64 substeps, so
/// the empirical curve slightly undercounts excursions between grid points;
/// the bound holds with margin at every tested level regardless.
template <class S>
struct BrownianTailReport {
  Vec<S> eta;
  Vec<S> bound;
  Vec<S> empirical;
  Vec<S> mcse;
  S max_gap = S(0);  // max over the grid of empirical - bound
  bool pass = false;
};

template <class S>
BrownianTailReport<S> tail_validator_brownian(Eigen::Index d, S h,
                                              Eigen::Index trials,
                                              std::uint64_t seed,
                                              int n_threads = 1) {
  if (d < 1) throw DomainError("brownian tail: dimension must be at least 1");
  if (!(h > S(0))) throw DomainError("brownian tail: h must be positive");
  if (trials < 10000) throw DomainError("brownian tail: need at least 1e4 trials");

  const std::vector<S> levels{S(3), S(1), S(0.3), S(0.1), S(0.03), S(0.01)};
  const int nl = int(levels.size());
  BrownianTailReport<S> rep;
  rep.eta = Vec<S>(nl);
  rep.bound = Vec<S>(nl);
  for (int i = 0; i < nl; ++i) {
    rep.bound[i] = levels[std::size_t(i)];
    rep.eta[i] = levels[std::size_t(i)] >= S(3)
                     ? S(0)
                     : std::sqrt(6 * S(d) * h * std::log(S(3) / levels[std::size_t(i)]));
  }

  const int substeps = 64;
  const S sd = std::sqrt(h / S(substeps));
  Vec<S> sups = Vec<S>::Zero(trials);
  parallel_for(trials, n_threads, [&](Eigen::Index lo, Eigen::Index hi) {
    Vec<S> z(d), b(d);
    for (Eigen::Index t = lo; t < hi; ++t) {
      CounterRng rng(seed, std::uint32_t(t));
      b.setZero();
      S sup = S(0);
      for (int m = 0; m < substeps; ++m) {
        rng.template fill_normal<S>(std::uint64_t(m) + 1, z);
        b += sd * z;
        sup = std::max(sup, S(b.norm()));
      }
      sups[t] = sup;
    }
  });
  Vec<S> total = Vec<S>::Zero(nl);
  for (Eigen::Index t = 0; t < trials; ++t)
    for (int i = 0; i < nl; ++i)
      if (sups[t] >= rep.eta[i]) total[i] += S(1);

  rep.empirical = total / S(trials);
  rep.mcse = Vec<S>(nl);
  rep.max_gap = -std::numeric_limits<S>::infinity();
  rep.pass = true;
  for (int i = 0; i < nl; ++i) {
    const S p = rep.empirical[i];
    rep.mcse[i] = std::sqrt(std::max(S(0), p * (1 - p)) / S(trials));
    rep.max_gap = std::max(rep.max_gap, p - rep.bound[i]);
    if (p > rep.bound[i] + 3 * rep.mcse[i]) rep.pass = false;
  }
  return rep;
}

/// Empirical check that running maxima of iterate norms stay under the
/// high-probability envelopes
///   position: mult * ( m_scale + sqrt((T/gamma) (R2 + log(N/delta))) )
///   momentum: mult * ( sqrt(d)  + sqrt(        R2 + log(N/delta))  )
/// at confidence levels delta in {0.1, 0.01}. Chains run on the modified
/// target; the position scale m_scale uses the base target's curvature
/// (sqrt(d/m) when strongly convex, 2 sqrt(d) otherwise) and R2 is the
/// initialization plug-in beta + L + d.
template <class S>
struct IterateTailReport {
  std::vector<S> deltas;
  Vec<S> quantile_x, quantile_v;  // empirical (1-delta)-quantiles of running maxima
  Vec<S> envelope_x, envelope_v;  // envelopes before the multiplier
  S multiplier = S(0);
  S smallest_passing = S(0);  // max over deltas of quantile / envelope
  S r2_plugin = S(0);
  bool pass = false;
};

template <class S>
IterateTailReport<S> tail_validator_iterates(
    const TargetPtr<S>& target, const SchedulePlan<S>& plan,
    const ModifiedTargetParams<S>& modified, Eigen::Index trials,
    std::uint64_t seed, S multiplier = S(5),
    const std::vector<S>& deltas = {S(0.1), S(0.01)}, int n_threads = 1) {
  if (trials < 100) throw DomainError("iterate tail: need at least 100 trials");
  if (plan.N < 1 || !(plan.h > S(0)) || !(plan.gamma > S(0)))
    throw DomainError("iterate tail: invalid plan");
  for (S dl : deltas)
    if (!(dl > S(0) && dl <= S(0.5)))
      throw DomainError("iterate tail: confidence levels must lie in (0, 0.5]");

  const Eigen::Index d = target->dim();
  const auto info = target->constants();
  const S L = info.L > S(0) ? info.L : S(1);
  const S beta = plan.init_beta > S(0)
                     ? plan.init_beta
                     : std::min(S(1), plan.gamma / std::max(plan.T, plan.h));
  const auto law = initialization<S>(L, beta, d);
  const Mat<S> factor = cholesky_spd<S>(law.cov, "iterate tail init");
  const TargetPtr<S> mtarget = modify<S>(target, modified);
  const auto sc = step_coefficients<S>(plan.gamma, plan.h);
  const S l11 = sc.chol(0, 0), l21 = sc.chol(1, 0), l22 = sc.chol(1, 1);

  std::vector<S> max_x(static_cast<std::size_t>(trials)), max_v(static_cast<std::size_t>(trials));
  parallel_for(trials, n_threads, [&](Eigen::Index lo, Eigen::Index hi) {
    Vec<S> z(2 * d), x(d), v(d), g(d), full(2 * d);
    for (Eigen::Index c = lo; c < hi; ++c) {
      CounterRng rng(seed, std::uint32_t(c));
      rng.template fill_normal<S>(0, z);
      full = law.mean + factor * z;
      x = full.head(d);
      v = full.tail(d);
      S mx = x.norm(), mv = v.norm();
      for (std::int64_t k = 0; k < plan.N; ++k) {
        g = mtarget->gradient(x);
        rng.template fill_normal<S>(std::uint64_t(k) + 1, z);
        const auto z1 = z.head(d), z2 = z.tail(d);
        const Vec<S> xn = x + sc.c_xv * v - sc.c_xg * g + l11 * z1;
        v = sc.eta * v - sc.c_vg * g + l21 * z1 + l22 * z2;
        x = xn;
        mx = std::max(mx, S(x.norm()));
        mv = std::max(mv, S(v.norm()));
      }
      max_x[std::size_t(c)] = mx;
      max_v[std::size_t(c)] = mv;
    }
  });
  std::sort(max_x.begin(), max_x.end());
  std::sort(max_v.begin(), max_v.end());

  IterateTailReport<S> rep;
  rep.deltas = deltas;
  rep.multiplier = multiplier;
  rep.r2_plugin = modified.beta + info.L + S(d);
  const S m_scale = info.m > S(0) ? std::sqrt(S(d) / info.m) : 2 * std::sqrt(S(d));
  const int nd = int(deltas.size());
  rep.quantile_x = Vec<S>(nd);
  rep.quantile_v = Vec<S>(nd);
  rep.envelope_x = Vec<S>(nd);
  rep.envelope_v = Vec<S>(nd);
  rep.smallest_passing = S(0);
  for (int i = 0; i < nd; ++i) {
    const S dl = deltas[std::size_t(i)];
    const auto idx = std::min<std::size_t>(
        std::size_t(trials) - 1,
        std::size_t(std::ceil((1 - double(dl)) * double(trials))) - 1);
    rep.quantile_x[i] = max_x[idx];
    rep.quantile_v[i] = max_v[idx];
    const S log_term = rep.r2_plugin + std::log(S(plan.N) / dl);
    rep.envelope_x[i] = m_scale + std::sqrt((plan.T / plan.gamma) * log_term);
    rep.envelope_v[i] = std::sqrt(S(d)) + std::sqrt(log_term);
    rep.smallest_passing =
        std::max({rep.smallest_passing, rep.quantile_x[i] / rep.envelope_x[i],
                  rep.quantile_v[i] / rep.envelope_v[i]});
  }
  rep.pass = rep.smallest_passing <= multiplier;
  return rep;
}

/// One-window movement check: estimates log E exp(lambda sup_{t<=h}
/// ||x_t - x_0||^{2s}) by Monte Carlo (gradient refreshed at every substep)
/// at lambda = lambda_scale / (gamma^s d^s h^{3s}) and compares against
///   C (L^{2s} h^{4s} (1 + ||x0||^{2s^2}) + h^{2s} ||v0||^{2s}
///      + gamma^s d^s h^{3s}) * lambda.
template <class S>
struct MovementOptions {
  S lambda_scale = S(0.1);  // must lie in (0, 1/4]
  S C = S(50);
  int substeps = 64;
  int n_threads = 1;
};

template <class S>
struct MovementReport {
  S estimate = S(0);
  S bound = S(0);
  S lambda = S(0);
  S ratio = S(0);
  bool pass = false;
  Vec<S> sups;  // per-trial window supremum of ||x_t - x_0||
};

template <class S>
MovementReport<S> movement_bound_check(const Target<S>& target, S gamma, S h,
                                       const PhasePoint<S>& start,
                                       Eigen::Index trials, std::uint64_t seed,
                                       const MovementOptions<S>& opts = {}) {
  if (!(gamma > S(0)) || !(h > S(0)))
    throw DomainError("movement check: gamma and h must be positive");
  if (trials < 100) throw DomainError("movement check: need at least 100 trials");
  if (opts.substeps < 8) throw DomainError("movement check: need at least 8 substeps");
  if (!(opts.lambda_scale > S(0) && opts.lambda_scale <= S(0.25)))
    throw DomainError(
        "movement check: lambda_scale outside the exponential-moment window (0, 1/4]");
  const auto info = target.constants();
  const S limit = 2 * std::min(info.L > S(0) ? S(1) / std::sqrt(info.L)
                                             : std::numeric_limits<S>::infinity(),
                               S(1) / gamma);
  if (h > limit)
    throw DomainError("movement check: h exceeds the stability window");
  const Eigen::Index d = target.dim();
  if (start.dim() != d) throw DimensionError("movement check: start dimension");

  const S s = info.s;
  const S lambda = opts.lambda_scale /
                   (std::pow(gamma, s) * std::pow(S(d), s) * std::pow(h, 3 * s));
  const S delta = h / S(opts.substeps);
  const auto sc = step_coefficients<S>(gamma, delta);
  const S l11 = sc.chol(0, 0), l21 = sc.chol(1, 0), l22 = sc.chol(1, 1);

  MovementReport<S> rep;
  rep.lambda = lambda;
  rep.sups = Vec<S>::Zero(trials);
  parallel_for(trials, opts.n_threads, [&](Eigen::Index lo, Eigen::Index hi) {
    Vec<S> z(2 * d), x(d), v(d), g(d);
    for (Eigen::Index t = lo; t < hi; ++t) {
      CounterRng rng(seed, std::uint32_t(t));
      x = start.x;
      v = start.v;
      S sup = S(0);
      for (int m = 0; m < opts.substeps; ++m) {
        g = target.gradient(x);
        rng.template fill_normal<S>(std::uint64_t(m) + 1, z);
        const auto z1 = z.head(d), z2 = z.tail(d);
        const Vec<S> xn = x + sc.c_xv * v - sc.c_xg * g + l11 * z1;
        v = sc.eta * v - sc.c_vg * g + l21 * z1 + l22 * z2;
        x = xn;
        sup = std::max(sup, S((x - start.x).norm()));
      }
      rep.sups[t] = sup;
    }
  });

  std::vector<S> a(static_cast<std::size_t>(trials));
  for (Eigen::Index i = 0; i < trials; ++i)
    a[std::size_t(i)] = lambda * std::pow(rep.sups[i], 2 * s);
  const S amax = *std::max_element(a.begin(), a.end());
  rep.estimate = amax > S(700) ? std::numeric_limits<S>::infinity()
                               : detail::log_mean_exp(a);
  rep.bound = opts.C * lambda *
              (std::pow(info.L, 2 * s) * std::pow(h, 4 * s) *
                   (1 + std::pow(S(start.x.norm()), 2 * s * s)) +
               std::pow(h, 2 * s) * std::pow(S(start.v.norm()), 2 * s) +
               std::pow(gamma, s) * std::pow(S(d), s) * std::pow(h, 3 * s));
  rep.ratio = rep.estimate / rep.bound;
  rep.pass = rep.estimate <= rep.bound;
  return rep;
}

}  // namespace ulmc
