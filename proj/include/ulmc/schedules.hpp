#pragma once

// Parameter planners: closed-form step-size/horizon schedules for the exact
// underdamped Langevin kernel under three assumption regimes (strong log-
// concavity for KL, a log-Sobolev inequality for TV, a Poincare inequality
// for Renyi), plus the product Gaussian initialization and the step-size
// bound used by the path-measure change argument.
//
// Conventions shared by all planners:
//   * PlannerConstants supplies positive multipliers (defaults 1.0) standing
//     in for the hidden constants of the complexity statements.
//   * The h-side polylog divisor is log(e + argument) — strictly > 1, so it
//     only ever shrinks h; the T-side factor is max(1, log(argument)). The
//     freeze_h_logs / freeze_T_logs flags replace each side by 1.
//   * Every plan is clamped to the stability guard
//       h <= c_guard * min(L^{-1/2}, gamma^{-1}, d^{-1/2}),
//     recording a warning when the clamp fires.
//   * Plans record the product initialization weight beta = gamma / T and
//     position variance varsigma = 1 / (2L + beta).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include <ulmc/errors.hpp>
#include <ulmc/types.hpp>

namespace ulmc {

namespace detail {

// ceil with a one-part-in-1e13 backoff so ratios that are integers up to
// floating-point dust do not round up an extra step.
inline std::int64_t ceil_count(double ratio) {
  return std::int64_t(std::ceil(ratio * (1.0 - 1e-13)));
}

template <class S>
void check_eps(S eps) {
  if (!(eps > S(0) && eps <= S(1))) throw DomainError("accuracy must lie in (0, 1]");
}

template <class S>
void apply_step_guard(SchedulePlan<S>& plan, S L, Eigen::Index d) {
  const S guard =
      plan.constants.c_guard *
      std::min({S(1) / std::sqrt(L), S(1) / plan.gamma, S(1) / std::sqrt(S(d))});
  if (plan.h > guard) {
    std::ostringstream msg;
    msg << "step size reduced from " << plan.h << " to " << guard
        << " by the stability guard";
    plan.warnings.push_back(msg.str());
    plan.h = guard;
  }
}

template <class S>
void record_initialization(SchedulePlan<S>& plan, S L) {
  plan.init_beta = plan.gamma / plan.T;
  plan.init_varsigma = S(1) / (2 * L + plan.init_beta);
}

}  // namespace detail

/// Product initialization on phase space: N(0, varsigma I_d) in position with
/// varsigma = 1/(2L + beta), standard Gaussian momentum, independent blocks.
template <class S>
GaussianLaw<S> initialization(S L, S beta, Eigen::Index d) {
  if (!(L > S(0))) throw DomainError("initialization: L must be positive");
  if (!(beta >= S(0))) throw DomainError("initialization: beta must be nonnegative");
  if (d < 1) throw DomainError("initialization: dimension must be at least 1");
  GaussianLaw<S> law;
  law.mean = Vec<S>::Zero(2 * d);
  law.cov = Mat<S>::Identity(2 * d, 2 * d);
  law.cov.topLeftCorner(d, d) *= S(1) / (2 * L + beta);
  return law;
}

/// KL planner for m-strongly-log-concave, L-smooth targets:
///   gamma = c_gamma * 2 sqrt(2L),
///   h     = c_h * eps sqrt(m) / (L sqrt(d)) / log(e + kappa d / eps^2),
///   T     = c_T * (sqrt(L)/m) * max(1, log(kappa d / eps^2)),
///   N     = ceil(T / h).
template <class S>
SchedulePlan<S> plan_kl_strongly_logconcave(S m, S L, Eigen::Index d, S eps,
                                            PlannerConstants<S> k = {}) {
  if (!(m > S(0))) throw DomainError("plan_kl: m must be positive");
  if (!(L >= m)) throw DomainError("plan_kl: need m <= L");
  if (d < 1) throw DomainError("plan_kl: dimension must be at least 1");
  detail::check_eps(eps);

  const S kappa = L / m;
  SchedulePlan<S> plan;
  plan.metric = Metric::KL;
  plan.q = S(1);
  plan.eps = eps;
  plan.constants = k;
  plan.gamma = k.c_gamma * 2 * std::sqrt(2 * L);

  const S arg = kappa * S(d) / (eps * eps);
  plan.log_h_factor = k.freeze_h_logs ? S(1) : std::log(std::exp(S(1)) + arg);
  plan.log_T_factor = k.freeze_T_logs ? S(1) : std::max(S(1), std::log(arg));
  plan.h = k.c_h * eps * std::sqrt(m) / (L * std::sqrt(S(d))) / plan.log_h_factor;
  plan.T = k.c_T * (std::sqrt(L) / m) * plan.log_T_factor;

  detail::apply_step_guard(plan, L, d);
  plan.N_exact = plan.T / plan.h;
  plan.N = detail::ceil_count(double(plan.N_exact));
  detail::record_initialization(plan, L);
  return plan;
}

/// TV planner under a log-Sobolev inequality with constant C_lsi:
///   gamma = c_gamma * sqrt(L),
///   h     = c_h * eps / (sqrt(C_lsi) L sqrt(d)) / log(e + C_lsi L d / eps^2),
///   T     = c_T * C_lsi sqrt(L) * max(1, log(d / eps^2)),
///   N     = ceil(T / h).
template <class S>
SchedulePlan<S> plan_tv_lsi(S C_lsi, S L, Eigen::Index d, S eps,
                            PlannerConstants<S> k = {}) {
  if (!(C_lsi > S(0))) throw DomainError("plan_tv: C_lsi must be positive");
  if (!(L > S(0))) throw DomainError("plan_tv: L must be positive");
  if (d < 1) throw DomainError("plan_tv: dimension must be at least 1");
  detail::check_eps(eps);

  SchedulePlan<S> plan;
  plan.metric = Metric::TV;
  plan.q = S(1);
  plan.eps = eps;
  plan.constants = k;
  plan.gamma = k.c_gamma * std::sqrt(L);

  const S h_arg = C_lsi * L * S(d) / (eps * eps);
  const S t_arg = S(d) / (eps * eps);
  plan.log_h_factor = k.freeze_h_logs ? S(1) : std::log(std::exp(S(1)) + h_arg);
  plan.log_T_factor = k.freeze_T_logs ? S(1) : std::max(S(1), std::log(t_arg));
  plan.h = k.c_h * eps / (std::sqrt(C_lsi) * L * std::sqrt(S(d))) / plan.log_h_factor;
  plan.T = k.c_T * C_lsi * std::sqrt(L) * plan.log_T_factor;

  detail::apply_step_guard(plan, L, d);
  plan.N_exact = plan.T / plan.h;
  plan.N = detail::ceil_count(double(plan.N_exact));
  detail::record_initialization(plan, L);
  return plan;
}

/// Exponential decay rate extracted from the Poincare-based contraction:
///   rate(gamma) = (C_pi^{-1} gamma) / (C0 (C_pi^{-1} + R^2 + gamma^2)).
/// Maximized at gamma* = sqrt(C_pi^{-1} + R^2).
template <class S>
S poincare_rate(S C_pi, S R, S gamma, S C0) {
  if (!(C_pi > S(0))) throw DomainError("poincare_rate: C_pi must be positive");
  if (!(R >= S(0))) throw DomainError("poincare_rate: R must be nonnegative");
  if (!(gamma > S(0))) throw DomainError("poincare_rate: gamma must be positive");
  if (!(C0 > S(0))) throw DomainError("poincare_rate: C0 must be positive");
  const S inv = S(1) / C_pi;
  return (inv * gamma) / (C0 * (inv + R * R + gamma * gamma));
}

/// Renyi planner under a Poincare inequality. With rate = poincare_rate at
/// gamma = c_gamma sqrt(C_pi^{-1} + R^2) and D = max(L, d):
///   h = c_h * gamma^{1/(2s)} eps^{1/s} (xi/2)^{1/s} rate^{1/(2s)}
///         / (L^{1/s} sqrt(d) D^{1/(2s)}) / log(e + L d D / (gamma xi eps rate)),
///   N = ceil(c_T * L^{1/s} sqrt(d) D^{1 + 1/(2s)} (2/xi)^{1/s}
///         / (gamma^{1/(2s)} eps^{1/s} rate^{1 + 1/(2s)})),
///   T = N h; records the Renyi order q = 2 - xi.
/// The N display carries no polylog, so the planner is exactly homogeneous:
/// scaling eps by t scales N_exact by t^{-1/s}.
template <class S>
SchedulePlan<S> plan_renyi_poincare(S C_pi, S L, S s, Eigen::Index d, S eps, S xi,
                                    S R, PlannerConstants<S> k = {}) {
  if (!(C_pi > S(0))) throw DomainError("plan_renyi: C_pi must be positive");
  if (!(L > S(0))) throw DomainError("plan_renyi: L must be positive");
  if (!(s > S(0) && s <= S(1))) throw DomainError("plan_renyi: s must lie in (0, 1]");
  if (!(xi > S(0) && xi < S(1))) throw DomainError("plan_renyi: xi must lie in (0, 1)");
  if (!(R >= S(0))) throw DomainError("plan_renyi: R must be nonnegative");
  if (d < 1) throw DomainError("plan_renyi: dimension must be at least 1");
  detail::check_eps(eps);

  SchedulePlan<S> plan;
  plan.metric = Metric::Renyi;
  plan.q = S(2) - xi;
  plan.eps = eps;
  plan.constants = k;
  plan.gamma = k.c_gamma * std::sqrt(S(1) / C_pi + R * R);

  const S rate = poincare_rate(C_pi, R, plan.gamma, k.C0);
  const S D = std::max(L, S(d));
  const S inv_s = S(1) / s;
  const S inv_2s = S(1) / (2 * s);

  const S h_arg = L * S(d) * D / (plan.gamma * xi * eps * rate);
  plan.log_h_factor = k.freeze_h_logs ? S(1) : std::log(std::exp(S(1)) + h_arg);
  plan.h = k.c_h * std::pow(plan.gamma, inv_2s) * std::pow(eps, inv_s) *
           std::pow(xi / 2, inv_s) * std::pow(rate, inv_2s) /
           (std::pow(L, inv_s) * std::sqrt(S(d)) * std::pow(D, inv_2s)) /
           plan.log_h_factor;
  plan.log_T_factor = S(1);

  detail::apply_step_guard(plan, L, d);
  plan.N_exact = k.c_T * std::pow(L, inv_s) * std::sqrt(S(d)) *
                 std::pow(D, S(1) + inv_2s) * std::pow(2 / xi, inv_s) /
                 (std::pow(plan.gamma, inv_2s) * std::pow(eps, inv_s) *
                  std::pow(rate, S(1) + inv_2s));
  plan.N = detail::ceil_count(double(plan.N_exact));
  plan.T = S(plan.N) * plan.h;
  detail::record_initialization(plan, L);
  return plan;
}

/// Step-size bound sufficient for the change-of-measure argument over horizon
/// T at Renyi order q:
///   h = c_h * gamma^{1/(2s)} eps^{1/s}
///         / (L^{1/s} T^{1/(2s)} q^{1/s} sqrt(d + R2_init))
///         / log(e + L T q (d + R2_init) / (gamma eps)).
template <class S>
S girsanov_step_bound(S gamma, S L, S s, S T, S q, Eigen::Index d, S R2_init, S eps,
                      PlannerConstants<S> k = {}) {
  if (!(gamma > S(0))) throw DomainError("girsanov_step_bound: gamma must be positive");
  if (!(L > S(0))) throw DomainError("girsanov_step_bound: L must be positive");
  if (!(s > S(0) && s <= S(1)))
    throw DomainError("girsanov_step_bound: s must lie in (0, 1]");
  if (!(T > S(0))) throw DomainError("girsanov_step_bound: T must be positive");
  if (!(q >= S(1))) throw DomainError("girsanov_step_bound: order q must be >= 1");
  if (!(R2_init >= S(0)))
    throw DomainError("girsanov_step_bound: R2_init must be nonnegative");
  if (d < 1) throw DomainError("girsanov_step_bound: dimension must be at least 1");
  detail::check_eps(eps);

  const S inv_s = S(1) / s;
  const S inv_2s = S(1) / (2 * s);
  const S log_factor =
      k.freeze_h_logs
          ? S(1)
          : std::log(std::exp(S(1)) + L * T * q * (S(d) + R2_init) / (gamma * eps));
  return k.c_h * std::pow(gamma, inv_2s) * std::pow(eps, inv_s) /
         (std::pow(L, inv_s) * std::pow(T, inv_2s) * std::pow(q, inv_s) *
          std::sqrt(S(d) + R2_init)) /
         log_factor;
}

}  // namespace ulmc
