#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "ulmc/errors.hpp"
#include "ulmc/integrator.hpp"
#include "ulmc/linalg.hpp"
#include "ulmc/targets.hpp"
#include "ulmc/types.hpp"

namespace ulmc {

/// One step of the chain on a quadratic potential is the linear Gaussian
/// recursion  state' = A state + N(0, Q).
template <class S>
struct LinearKernel {
  Mat<S> A;
  Mat<S> Q;

  Eigen::Index phase_dim() const { return A.rows(); }
};

/// Extracts the constant Hessian of a quadratic potential, verifying both
/// that the Hessian does not move between probe points and that the gradient
/// is exactly the linear map H x (to 1e-10 relative).
template <class S>
Mat<S> quadratic_hessian(const Target<S>& target) {
  if (!target.has_hessian()) {
    throw NotQuadraticError(target.name() + ": no Hessian, cannot be quadratic");
  }
  const Eigen::Index d = target.dim();
  const Mat<S> H0 = symmetrized<S>(target.hessian(Vec<S>::Zero(d)));
  CounterRng rng(0xA5A5F00Dull, 0);
  Vec<S> x(d);
  rng.fill_normal(0, x);
  x *= S(1.7);
  const S scale = std::max(S(1), H0.cwiseAbs().maxCoeff());
  if ((symmetrized<S>(target.hessian(x)) - H0).cwiseAbs().maxCoeff() >
      S(1e-10) * scale) {
    throw NotQuadraticError(target.name() + ": Hessian varies between points");
  }
  const S gscale = std::max(S(1), scale * x.cwiseAbs().maxCoeff());
  if ((target.gradient(x) - H0 * x).cwiseAbs().maxCoeff() > S(1e-10) * gscale) {
    throw NotQuadraticError(target.name() + ": gradient is not the linear map H x");
  }
  return H0;
}

/// Assembles the exact one-step kernel for a quadratic potential:
///   x' = (I - c_xg H) x + c_xv v + W_x,   v' = -c_vg H x + eta v + W_v,
/// with the block-scalar noise covariance from step_coefficients.
template <class S>
LinearKernel<S> kernel_from_quadratic(const Target<S>& target, S gamma, S h) {
  const Mat<S> H = quadratic_hessian<S>(target);
  const auto sc = step_coefficients<S>(gamma, h);
  const Eigen::Index d = target.dim();
  const Mat<S> I = Mat<S>::Identity(d, d);
  LinearKernel<S> k;
  k.A.resize(2 * d, 2 * d);
  k.Q.resize(2 * d, 2 * d);
  k.A.topLeftCorner(d, d) = I - sc.c_xg * H;
  k.A.topRightCorner(d, d) = sc.c_xv * I;
  k.A.bottomLeftCorner(d, d) = -sc.c_vg * H;
  k.A.bottomRightCorner(d, d) = sc.eta * I;
  k.Q.topLeftCorner(d, d) = sc.cov(0, 0) * I;
  k.Q.topRightCorner(d, d) = sc.cov(0, 1) * I;
  k.Q.bottomLeftCorner(d, d) = sc.cov(0, 1) * I;
  k.Q.bottomRightCorner(d, d) = sc.cov(1, 1) * I;
  return k;
}

/// Applies the recursion n times: mean <- A mean, cov <- A cov A^T + Q,
/// re-symmetrizing every step. Divergence (non-finite entries, e.g. from a
/// non-contractive A) is reported with the offending step.
template <class S>
GaussianLaw<S> propagate_law(const GaussianLaw<S>& law, const LinearKernel<S>& k,
                             std::int64_t n) {
  if (n < 0) throw DomainError("propagate_law: step count must be >= 0");
  if (k.A.rows() != k.A.cols() || k.Q.rows() != k.A.rows() ||
      k.Q.cols() != k.A.cols()) {
    throw DimensionError("propagate_law: kernel blocks must be square and equal");
  }
  if (law.mean.size() != k.A.rows() || law.cov.rows() != k.A.rows()) {
    throw DimensionError("propagate_law: law/kernel dimension mismatch");
  }
  GaussianLaw<S> out = law;
  for (std::int64_t i = 0; i < n; ++i) {
    out.mean = k.A * out.mean;
    out.cov = symmetrized<S>(k.A * out.cov * k.A.transpose() + k.Q);
    if (!out.mean.allFinite() || !out.cov.allFinite()) {
      throw NumericsError("propagate_law: law diverged at step " +
                          std::to_string(i + 1) +
                          " (kernel spectral radius likely above 1)");
    }
  }
  return out;
}

/// Fixed point of cov <- A cov A^T + Q (mean 0), iterated to 1e-13 max-norm.
/// Requires spectral radius of A strictly below 1.
template <class S>
GaussianLaw<S> stationary_law(const LinearKernel<S>& k) {
  if (k.A.rows() != k.A.cols() || k.Q.rows() != k.A.rows() ||
      k.Q.cols() != k.A.cols()) {
    throw DimensionError("stationary_law: kernel blocks must be square and equal");
  }
  const S rho = spectral_radius<S>(k.A);
  if (!(rho < S(1) - S(1e-12))) {
    throw NonContractiveError("stationary_law: spectral radius " +
                              std::to_string(double(rho)) + " is not below 1");
  }
  Mat<S> sigma = symmetrized<S>(k.Q);
  for (long it = 0; it < 4000000; ++it) {
    Mat<S> next = symmetrized<S>(k.A * sigma * k.A.transpose() + k.Q);
    const S diff = (next - sigma).cwiseAbs().maxCoeff();
    sigma = std::move(next);
    if (diff <= S(1e-13) * std::max(S(1), sigma.cwiseAbs().maxCoeff())) {
      GaussianLaw<S> out;
      out.mean = Vec<S>::Zero(k.A.rows());
      out.cov = sigma;
      return out;
    }
  }
  throw NumericsError("stationary_law: fixed-point iteration did not converge");
}

/// KL(p || q) between Gaussians, closed form. Values in [-1e-8, 0) from
/// roundoff are clamped to 0; anything more negative is an error. Singular
/// covariances are refused (typed error from the Cholesky).
template <class S>
S gaussian_kl(const GaussianLaw<S>& p, const GaussianLaw<S>& q) {
  const Eigen::Index n = p.mean.size();
  if (q.mean.size() != n) throw DimensionError("gaussian_kl: dimension mismatch");
  const S ld_p = logdet_spd<S>(p.cov, "gaussian_kl: first covariance");
  const S ld_q = logdet_spd<S>(q.cov, "gaussian_kl: second covariance");
  const Mat<S> qi_p = solve_spd<S>(q.cov, p.cov, "gaussian_kl: second covariance");
  const Mat<S> delta = p.mean - q.mean;
  const Mat<S> w = solve_spd<S>(q.cov, delta, "gaussian_kl: second covariance");
  S kl = S(0.5) * (qi_p.trace() - S(n) + (delta.transpose() * w)(0, 0) + ld_q - ld_p);
  if (kl < S(0)) {
    if (kl > S(-1e-8)) return S(0);
    throw NumericsError("gaussian_kl: value " + std::to_string(double(kl)) +
                        " is negative beyond roundoff");
  }
  return kl;
}

/// Renyi divergence R_order(p || q) for order > 1. Returns +infinity when the
/// mixture covariance order*cov_q + (1-order)*cov_p is not positive definite
/// (the divergence genuinely diverges there). R_order -> KL as order -> 1.
template <class S>
S gaussian_renyi(S order, const GaussianLaw<S>& p, const GaussianLaw<S>& q) {
  if (!(order > S(1))) throw DomainError("gaussian_renyi: order must exceed 1");
  const Eigen::Index n = p.mean.size();
  if (q.mean.size() != n) throw DimensionError("gaussian_renyi: dimension mismatch");
  const S ld_p = logdet_spd<S>(p.cov, "gaussian_renyi: first covariance");
  const S ld_q = logdet_spd<S>(q.cov, "gaussian_renyi: second covariance");
  const Mat<S> star = symmetrized<S>(order * q.cov + (S(1) - order) * p.cov);
  if (min_eigenvalue_sym<S>(star) <= S(0)) {
    return std::numeric_limits<S>::infinity();
  }
  const S ld_star = logdet_spd<S>(star, "gaussian_renyi: mixture covariance");
  const Mat<S> delta = p.mean - q.mean;
  const Mat<S> w = solve_spd<S>(star, delta, "gaussian_renyi: mixture covariance");
  S r = (order / S(2)) * (delta.transpose() * w)(0, 0) -
        (ld_star - (S(1) - order) * ld_p - order * ld_q) / (S(2) * (order - S(1)));
  if (r < S(0)) {
    if (r > S(-1e-8)) return S(0);
    throw NumericsError("gaussian_renyi: value " + std::to_string(double(r)) +
                        " is negative beyond roundoff");
  }
  return r;
}

/// 2-Wasserstein distance between Gaussians (Bures form).
template <class S>
S gaussian_w2(const GaussianLaw<S>& p, const GaussianLaw<S>& q) {
  const Eigen::Index n = p.mean.size();
  if (q.mean.size() != n) throw DimensionError("gaussian_w2: dimension mismatch");
  const Mat<S> sq = sqrt_psd<S>(q.cov);
  const Mat<S> inner = sqrt_psd<S>(symmetrized<S>(sq * p.cov * sq));
  const S w2sq = (p.mean - q.mean).squaredNorm() + p.cov.trace() + q.cov.trace() -
                 S(2) * inner.trace();
  return std::sqrt(std::max(S(0), w2sq));
}

/// The positive weight used by the Lyapunov functional, per coordinate
///   [ 1/(4L)      1/sqrt(2L) ]
///   [ 1/sqrt(2L)  4          ]   (determinant 1/(2L) > 0 per mode).
template <class S>
Mat<S> lyapunov_weight(S L, Eigen::Index d) {
  if (!(L > S(0))) throw DomainError("lyapunov_weight: L must be positive");
  if (d <= 0) throw DimensionError("lyapunov_weight: dimension must be positive");
  const S offd = S(1) / std::sqrt(S(2) * L);
  const S det_per_mode = S(4) / (S(4) * L) - offd * offd;
  if (!(det_per_mode > S(0))) {
    throw NumericsError("lyapunov_weight: weight lost positivity");  // 1/(2L) > 0 always
  }
  const Mat<S> I = Mat<S>::Identity(d, d);
  Mat<S> M(2 * d, 2 * d);
  M.topLeftCorner(d, d) = (S(1) / (S(4) * L)) * I;
  M.topRightCorner(d, d) = offd * I;
  M.bottomLeftCorner(d, d) = offd * I;
  M.bottomRightCorner(d, d) = S(4) * I;
  return M;
}

/// Weighted Fisher term E_p || W^{1/2} grad log(p / target) ||^2 with W the
/// Lyapunov weight. The gradient of the log ratio is affine for Gaussians,
/// so the expectation reduces to a trace plus a mean shift.
template <class S>
S lyapunov_fisher_term(const GaussianLaw<S>& p, const GaussianLaw<S>& target_law,
                       S L) {
  const Eigen::Index n = p.mean.size();
  if (target_law.mean.size() != n) {
    throw DimensionError("lyapunov_fisher_term: dimension mismatch");
  }
  if (n % 2 != 0) throw DimensionError("lyapunov_fisher_term: phase dim must be even");
  const Mat<S> W = lyapunov_weight<S>(L, n / 2);
  const Mat<S> I = Mat<S>::Identity(n, n);
  const Mat<S> pinv = solve_spd<S>(p.cov, I, "lyapunov_fisher_term: first covariance");
  const Mat<S> tinv =
      solve_spd<S>(target_law.cov, I, "lyapunov_fisher_term: target covariance");
  const Mat<S> A = symmetrized<S>(tinv - pinv);
  const Mat<S> mbar = tinv * (p.mean - target_law.mean);
  const S quad = (mbar.transpose() * W * mbar)(0, 0);
  return (W * A * p.cov * A).trace() + quad;
}

/// Lyapunov functional: KL plus the weighted Fisher term.
template <class S>
S lyapunov_functional(const GaussianLaw<S>& p, const GaussianLaw<S>& target_law,
                      S L) {
  return gaussian_kl<S>(p, target_law) + lyapunov_fisher_term<S>(p, target_law, L);
}

/// Gaussian log-Sobolev constant: the largest covariance eigenvalue.
template <class S>
S gaussian_lsi_constant(const Mat<S>& cov) {
  return max_eigenvalue_sym<S>(cov);
}

template <class S>
struct LsiTrajectoryOptions {
  S plateau_c = S(4);  // plateau is plateau_c / m
  S slack_c = S(20);   // slack is slack_c * h * sqrt(L) / m
};

template <class S>
struct LsiTrajectoryReport {
  S max_margin = S(0);       // max_k constant_k - bound_k; <= 0 means the bound held
  std::vector<S> constants;  // LSI constant of the twisted law at each step
  S rate = S(0);
  S plateau = S(0);
  S slack = S(0);
};

/// Tracks the log-Sobolev constant of the twisted law along the exact chain
/// on a strongly convex quadratic and compares it against
///   exp(-rate k h) C_0 + plateau + slack,
/// rate = 2m/gamma, plateau = plateau_c/m, slack = slack_c h sqrt(L)/m.
/// At the matched friction gamma = sqrt(2L) the rate equals m sqrt(2/L).
template <class S>
LsiTrajectoryReport<S> lsi_trajectory_check(const Target<S>& target, S gamma, S h,
                                            std::int64_t N, const GaussianLaw<S>& init,
                                            const LsiTrajectoryOptions<S>& opts = {}) {
  const S m = target.constants().m;
  const S L = target.constants().L;
  if (!(m > S(0))) {
    throw DomainError("lsi_trajectory_check: target must be strongly convex (m > 0)");
  }
  if (!(gamma >= std::sqrt(S(2) * L) * (S(1) - S(1e-12)))) {
    throw DomainError("lsi_trajectory_check: gamma must be at least sqrt(2 L)");
  }
  if (N < 0) throw DomainError("lsi_trajectory_check: negative step count");
  validate_law<S>(init);
  const auto kernel = kernel_from_quadratic<S>(target, gamma, h);
  if (init.mean.size() != kernel.A.rows()) {
    throw DimensionError("lsi_trajectory_check: init/target dimension mismatch");
  }
  const Eigen::Index d = target.dim();
  Mat<S> M = Mat<S>::Zero(2 * d, 2 * d);
  M.topLeftCorner(d, d) = Mat<S>::Identity(d, d);
  M.bottomLeftCorner(d, d) = Mat<S>::Identity(d, d);
  M.bottomRightCorner(d, d) = (S(2) / gamma) * Mat<S>::Identity(d, d);

  LsiTrajectoryReport<S> rep;
  rep.rate = S(2) * m / gamma;
  rep.plateau = opts.plateau_c / m;
  rep.slack = opts.slack_c * h * std::sqrt(L) / m;
  rep.constants.reserve(std::size_t(N) + 1);
  rep.max_margin = -std::numeric_limits<S>::infinity();
  GaussianLaw<S> law = init;
  S c0 = S(0);
  for (std::int64_t k = 0; k <= N; ++k) {
    const S ck =
        gaussian_lsi_constant<S>(symmetrized<S>(M * law.cov * M.transpose()));
    if (k == 0) c0 = ck;
    rep.constants.push_back(ck);
    const S bound = std::exp(-rep.rate * S(double(k)) * h) * c0 + rep.plateau + rep.slack;
    rep.max_margin = std::max(rep.max_margin, ck - bound);
    if (k < N) law = propagate_law<S>(law, kernel, 1);
  }
  return rep;
}

/// Law of the continuous dynamics at time t for a quadratic potential, via
/// one matrix exponential of the stacked drift/noise block system:
///   d(x,v) = F (x,v) dt + sqrt(D) dB,  F = [[0, I], [-H, -gamma I]],
///   D = diag(0, 2 gamma I).
template <class S>
GaussianLaw<S> continuous_law(const Target<S>& target, S gamma, S t,
                              const GaussianLaw<S>& init) {
  if (!(gamma > S(0))) throw DomainError("continuous_law: gamma must be positive");
  if (t < S(0)) throw DomainError("continuous_law: time must be nonnegative");
  const Mat<S> H = quadratic_hessian<S>(target);
  const Eigen::Index d = target.dim();
  const Eigen::Index n = 2 * d;
  validate_law<S>(init);
  if (init.mean.size() != n) {
    throw DimensionError("continuous_law: init/target dimension mismatch");
  }
  Mat<S> F = Mat<S>::Zero(n, n);
  F.topRightCorner(d, d) = Mat<S>::Identity(d, d);
  F.bottomLeftCorner(d, d) = -H;
  F.bottomRightCorner(d, d) = -gamma * Mat<S>::Identity(d, d);
  Mat<S> big = Mat<S>::Zero(2 * n, 2 * n);
  big.topLeftCorner(n, n) = -F * t;
  big.bottomRightCorner(n, n) = F.transpose() * t;
  big.block(d, n + d, d, d) = (S(2) * gamma * t) * Mat<S>::Identity(d, d);
  const Mat<S> E = big.exp();
  const Mat<S> Phi = E.bottomRightCorner(n, n).transpose();
  const Mat<S> G = symmetrized<S>(Phi * E.topRightCorner(n, n));
  GaussianLaw<S> out;
  out.mean = Phi * init.mean;
  out.cov = symmetrized<S>(Phi * init.cov * Phi.transpose() + G);
  return out;
}

/// Stationary law of the continuous dynamics: N(0, diag(H^{-1}, I)).
template <class S>
GaussianLaw<S> continuous_stationary_law(const Target<S>& target) {
  const Mat<S> H = quadratic_hessian<S>(target);
  const Eigen::Index d = target.dim();
  GaussianLaw<S> out;
  out.mean = Vec<S>::Zero(2 * d);
  out.cov = Mat<S>::Zero(2 * d, 2 * d);
  out.cov.topLeftCorner(d, d) = solve_spd<S>(
      H, Mat<S>::Identity(d, d), "continuous_stationary_law: Hessian");
  out.cov.bottomRightCorner(d, d) = Mat<S>::Identity(d, d);
  return out;
}

}  // namespace ulmc
