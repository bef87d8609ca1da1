#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ulmc/errors.hpp"
#include "ulmc/linalg.hpp"
#include "ulmc/parallel.hpp"
#include "ulmc/rng.hpp"
#include "ulmc/targets.hpp"
#include "ulmc/types.hpp"

namespace ulmc {

/// Mean coefficients and per-coordinate 2x2 noise covariance of the exact
/// underdamped Langevin transition with the gradient frozen over the step:
///   x' = x + c_xv v - c_xg grad U(x) + W_x
///   v' = eta v - c_vg grad U(x) + W_v,   (W_x, W_v) ~ N(0, cov) per coordinate.
template <class S>
struct StepCoefficients {
  S gamma = S(0);
  S h = S(0);
  S eta = S(0);   // e^{-gamma h}
  S c_xv = S(0);  // (1 - eta) / gamma
  S c_xg = S(0);  // (h - c_xv) / gamma
  S c_vg = S(0);  // (1 - eta) / gamma
  Eigen::Matrix<S, 2, 2> cov;   // [[Sxx, Sxv], [Sxv, Svv]]
  Eigen::Matrix<S, 2, 2> chol;  // lower triangular, chol * chol^T = cov
};

/// Closed-form transition coefficients for friction gamma and step h.
/// For gamma*h < 1e-3 every cancellation-prone expression switches to a
/// truncated Taylor series (four retained orders), keeping relative error
/// below ~1e-10 where the closed forms lose digits (Sxx is a three-term
/// difference of O(h) quantities with an O(h^3) result).
template <class S>
StepCoefficients<S> step_coefficients(S gamma, S h) {
  if (!(gamma > S(0))) throw DomainError("step_coefficients: gamma must be positive");
  if (!(h > S(0))) throw DomainError("step_coefficients: h must be positive");
  StepCoefficients<S> sc;
  sc.gamma = gamma;
  sc.h = h;
  const S u = gamma * h;
  sc.eta = std::exp(-u);
  S sxx, sxv, svv;
  if (u < S(1e-3)) {
    const S u2 = u * u, u3 = u2 * u;
    sc.c_xv = h * (S(1) - u / S(2) + u2 / S(6) - u3 / S(24));
    sc.c_xg = h * h * (S(0.5) - u / S(6) + u2 / S(24) - u3 / S(120));
    sxx = (S(2) * gamma / S(3)) * h * h * h *
          (S(1) - S(0.75) * u + S(21.0 / 60.0) * u2 - u3 / S(8));
    sxv = gamma * h * h * (S(1) - u + S(7.0 / 12.0) * u2 - u3 / S(4));
    svv = -std::expm1(S(-2) * u);
  } else {
    const S em1 = -std::expm1(-u);        // 1 - e^{-gamma h}
    const S em2 = -std::expm1(S(-2) * u); // 1 - e^{-2 gamma h}
    sc.c_xv = em1 / gamma;
    sc.c_xg = (h - sc.c_xv) / gamma;
    sxx = (S(2) / gamma) *
          (h - (S(2) / gamma) * em1 + (S(1) / (S(2) * gamma)) * em2);
    sxv = em1 * em1 / gamma;
    svv = em2;
  }
  sc.c_vg = sc.c_xv;
  sc.cov << sxx, sxv, sxv, svv;

  const auto factor = [&sc](S jitter) -> bool {
    const S a = sc.cov(0, 0) + jitter;
    if (!(a > S(0))) return false;
    const S l11 = std::sqrt(a);
    const S l21 = sc.cov(1, 0) / l11;
    const S rem = sc.cov(1, 1) + jitter - l21 * l21;
    if (!(rem >= S(0))) return false;
    sc.chol << l11, S(0), l21, std::sqrt(rem);
    return true;
  };
  if (!factor(S(0)) && !factor(S(1e-15) * (sxx + svv))) {
    throw NumericsError("step_coefficients: noise covariance indefinite beyond jitter");
  }
  return sc;
}

namespace detail {

template <class S>
inline std::string brief_point(const Vec<S>& x) {
  std::ostringstream os;
  os << "[";
  const Eigen::Index n = std::min<Eigen::Index>(x.size(), 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) os << ", ";
    os << double(x[i]);
  }
  if (x.size() > n) os << ", ...";
  os << "]";
  return os.str();
}

/// Steps at which run_chain records a snapshot: always 0; then either every
/// `stride` steps, or (stride == 0) the powers of two; always N last.
inline std::vector<std::int64_t> snapshot_steps(std::int64_t N, std::int64_t stride) {
  std::vector<std::int64_t> s{0};
  if (N <= 0) return s;
  if (stride > 0) {
    for (std::int64_t k = stride; k < N; k += stride) s.push_back(k);
  } else {
    for (std::int64_t p = 1; p < N; p *= 2) s.push_back(p);
  }
  s.push_back(N);
  return s;
}

}  // namespace detail

/// One transition of the exact kernel. `noise` holds 2d independent standard
/// normals: entries [0, d) drive the position block, [d, 2d) the momentum
/// block, coupled through the shared 2x2 Cholesky factor. Deterministic
/// given `noise`.
template <class S>
PhasePoint<S> ulmc_step(const PhasePoint<S>& state, const Target<S>& target,
                        const StepCoefficients<S>& coeffs, const Vec<S>& noise) {
  const Eigen::Index d = state.dim();
  if (state.v.size() != d) throw DimensionError("ulmc_step: x/v size mismatch");
  if (target.dim() != d) throw DimensionError("ulmc_step: target dimension mismatch");
  if (noise.size() != 2 * d) throw DimensionError("ulmc_step: noise must have length 2d");
  const Vec<S> g = target.gradient(state.x);
  if (!g.allFinite()) {
    throw NumericsError("ulmc_step: gradient not finite at x = " +
                        detail::brief_point<S>(state.x));
  }
  const S l11 = coeffs.chol(0, 0), l21 = coeffs.chol(1, 0), l22 = coeffs.chol(1, 1);
  PhasePoint<S> out;
  out.x = state.x + coeffs.c_xv * state.v - coeffs.c_xg * g + l11 * noise.head(d);
  out.v = coeffs.eta * state.v - coeffs.c_vg * g + l21 * noise.head(d) +
          l22 * noise.tail(d);
  if (!out.finite()) {
    throw NumericsError("ulmc_step: non-finite state after step from x = " +
                        detail::brief_point<S>(state.x));
  }
  return out;
}

struct RunOptions {
  std::int64_t snapshot_stride = 0;  // 0: powers of two; else every stride steps
  int n_threads = 1;
};

/// Materializes `chains` independent draws from a phase-space Gaussian law.
/// Chain c consumes the counter stream (seed, chain=c, step=0), so the result
/// is bitwise reproducible and independent of any parallel execution later.
template <class S>
Ensemble<S> draw_ensemble(const GaussianLaw<S>& law, Eigen::Index chains,
                          std::uint64_t seed) {
  validate_law(law);
  if (chains <= 0) throw DomainError("draw_ensemble: chain count must be positive");
  const Eigen::Index d = law.dim();
  Mat<S> factor;
  try {
    factor = cholesky_spd<S>(symmetrized<S>(law.cov), "draw_ensemble covariance");
  } catch (const SingularMatrixError&) {
    factor = sqrt_psd<S>(symmetrized<S>(law.cov));  // PSD (e.g. deterministic) init
  }
  Ensemble<S> e;
  e.x.resize(d, chains);
  e.v.resize(d, chains);
  e.step_index = 0;
  e.seed = seed;
  Vec<S> z(2 * d);
  Vec<S> pt(2 * d);
  for (Eigen::Index c = 0; c < chains; ++c) {
    CounterRng rng(seed, std::uint32_t(c));
    rng.fill_normal(0, z);
    pt = law.mean + factor * z;
    e.x.col(c) = pt.head(d);
    e.v.col(c) = pt.tail(d);
  }
  return e;
}

/// Advances every chain of `init` through plan.N transitions, recording
/// snapshots (see RunOptions). Chain c at absolute step k draws from the
/// counter stream (init.seed, c, k), so trajectories are bitwise
/// deterministic for a fixed seed and chain count regardless of n_threads.
/// Step errors are rethrown with the step and chain index attached.
template <class S>
std::vector<Ensemble<S>> run_chain(const Ensemble<S>& init, const Target<S>& target,
                                   const SchedulePlan<S>& plan,
                                   const RunOptions& opts = {}) {
  const Eigen::Index d = init.dim();
  if (init.v.rows() != d || init.v.cols() != init.x.cols()) {
    throw DimensionError("run_chain: ensemble x/v shape mismatch");
  }
  if (target.dim() != d) throw DimensionError("run_chain: target dimension mismatch");
  if (plan.N < 0) throw DomainError("run_chain: negative step count");
  const Eigen::Index chains = init.chains();
  const auto steps = detail::snapshot_steps(plan.N, opts.snapshot_stride);
  std::vector<Ensemble<S>> out(steps.size());
  for (std::size_t si = 0; si < steps.size(); ++si) {
    out[si].x.resize(d, chains);
    out[si].v.resize(d, chains);
    out[si].step_index = init.step_index + steps[si];
    out[si].seed = init.seed;
  }
  if (plan.N == 0) {
    out[0].x = init.x;
    out[0].v = init.v;
    return out;
  }
  const auto sc = step_coefficients(plan.gamma, plan.h);
  parallel_for(chains, opts.n_threads, [&](Eigen::Index cb, Eigen::Index ce) {
    Vec<S> z(2 * d);
    for (Eigen::Index c = cb; c < ce; ++c) {
      CounterRng rng(init.seed, std::uint32_t(c));
      PhasePoint<S> p{init.x.col(c), init.v.col(c)};
      std::size_t si = 0;
      if (steps[si] == 0) {
        out[si].x.col(c) = p.x;
        out[si].v.col(c) = p.v;
        ++si;
      }
      for (std::int64_t k = 1; k <= plan.N; ++k) {
        rng.fill_normal(std::uint64_t(init.step_index + k), z);
        try {
          p = ulmc_step(p, target, sc, z);
        } catch (const Error& err) {
          throw NumericsError("step " + std::to_string(init.step_index + k) +
                              ", chain " + std::to_string(c) + ": " + err.what());
        }
        if (si < steps.size() && steps[si] == k) {
          out[si].x.col(c) = p.x;
          out[si].v.col(c) = p.v;
          ++si;
        }
      }
    }
  });
  return out;
}

/// Convenience overload: draw the initial ensemble from `init`, then run.
template <class S>
std::vector<Ensemble<S>> run_chain(const GaussianLaw<S>& init, Eigen::Index chains,
                                   const Target<S>& target, const SchedulePlan<S>& plan,
                                   std::uint64_t seed, const RunOptions& opts = {}) {
  return run_chain<S>(draw_ensemble<S>(init, chains, seed), target, plan, opts);
}

/// Streams snapshots as CSV: a "# schema_version=N" comment line, a header
/// row "chain,step,x_1..x_d,v_1..v_d", then one row per (snapshot, chain)
/// with full-precision floats.
template <class S>
void write_trajectory_csv(std::ostream& os, const std::vector<Ensemble<S>>& snaps,
                          int schema_version = 1) {
  os << "# schema_version=" << schema_version << "\n";
  if (snaps.empty()) return;
  const Eigen::Index d = snaps.front().dim();
  os << "chain,step";
  for (Eigen::Index i = 0; i < d; ++i) os << ",x_" << (i + 1);
  for (Eigen::Index i = 0; i < d; ++i) os << ",v_" << (i + 1);
  os << "\n";
  char buf[40];
  const auto put = [&](double val) {
    std::snprintf(buf, sizeof(buf), "%.17g", val);
    os << ',' << buf;
  };
  for (const auto& e : snaps) {
    for (Eigen::Index c = 0; c < e.chains(); ++c) {
      os << c << ',' << e.step_index;
      for (Eigen::Index i = 0; i < d; ++i) put(double(e.x(i, c)));
      for (Eigen::Index i = 0; i < d; ++i) put(double(e.v(i, c)));
      os << "\n";
    }
  }
}

/// Contraction coordinates (phi, psi) = (x, x + (2/gamma) v).
template <class S>
std::pair<Vec<S>, Vec<S>> twist(const PhasePoint<S>& state, S gamma) {
  if (!(gamma > S(0))) throw DomainError("twist: gamma must be positive");
  return {state.x, state.x + (S(2) / gamma) * state.v};
}

/// Inverse of twist: x = phi, v = (gamma/2)(psi - phi).
template <class S>
PhasePoint<S> untwist(const Vec<S>& phi, const Vec<S>& psi, S gamma) {
  if (!(gamma > S(0))) throw DomainError("untwist: gamma must be positive");
  if (phi.size() != psi.size()) throw DimensionError("untwist: phi/psi size mismatch");
  PhasePoint<S> p;
  p.x = phi;
  p.v = (gamma / S(2)) * (psi - phi);
  return p;
}

/// Noise-free transition expressed in contraction coordinates: untwist, apply
/// the deterministic part of the kernel, twist back. h == 0 is the identity.
template <class S>
std::pair<Vec<S>, Vec<S>> twisted_mean_map(const Target<S>& target, S gamma, S h,
                                           const Vec<S>& phi, const Vec<S>& psi) {
  if (h == S(0)) return {phi, psi};
  const auto sc = step_coefficients(gamma, h);
  const PhasePoint<S> p = untwist<S>(phi, psi, gamma);
  const Vec<S> g = target.gradient(p.x);
  PhasePoint<S> q;
  q.x = p.x + sc.c_xv * p.v - sc.c_xg * g;
  q.v = sc.eta * p.v - sc.c_vg * g;
  return twist<S>(q, gamma);
}

/// Jacobian of the twisted mean map at phi (the map is affine in psi, so the
/// base point's psi does not enter). With a = e^{-gamma h} and H = hess U(phi):
///   [ (1+a)/2 I - c_xg H        (1-a)/2 I ]
///   [ (1-a)/2 I - c_plus H      (1+a)/2 I ],   c_plus = (h + c_xv)/gamma.
/// h == 0 returns the identity.
template <class S>
Mat<S> mean_map_jacobian(const Target<S>& target, S gamma, S h, const Vec<S>& phi) {
  if (!(gamma > S(0))) throw DomainError("mean_map_jacobian: gamma must be positive");
  if (h < S(0)) throw DomainError("mean_map_jacobian: h must be nonnegative");
  const Eigen::Index d = target.dim();
  if (phi.size() != d) throw DimensionError("mean_map_jacobian: phi dimension mismatch");
  if (h == S(0)) return Mat<S>::Identity(2 * d, 2 * d);
  const Mat<S> H = target.hessian(phi);  // throws MissingHessianError if absent
  const auto sc = step_coefficients(gamma, h);
  const S ap = (S(1) + sc.eta) / S(2);
  const S am = (S(1) - sc.eta) / S(2);
  const S c_plus = (h + sc.c_xv) / gamma;
  const Mat<S> I = Mat<S>::Identity(d, d);
  Mat<S> J(2 * d, 2 * d);
  J.topLeftCorner(d, d) = ap * I - sc.c_xg * H;
  J.topRightCorner(d, d) = am * I;
  J.bottomLeftCorner(d, d) = am * I - c_plus * H;
  J.bottomRightCorner(d, d) = ap * I;
  return J;
}

/// Max over probe points of the mean-map Jacobian operator norm. For a
/// quadratic potential the Hessian is constant, so any single probe gives the
/// exact contraction factor (max over Hessian eigenmodes).
template <class S>
S lipschitz_estimate(const Target<S>& target, S gamma, S h,
                     const std::vector<Vec<S>>& probes) {
  if (probes.empty()) throw DomainError("lipschitz_estimate: probe set is empty");
  S best = S(0);
  for (const auto& p : probes) {
    best = std::max(best, operator_norm<S>(mean_map_jacobian<S>(target, gamma, h, p)));
  }
  return best;
}

}  // namespace ulmc
