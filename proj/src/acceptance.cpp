#include <ulmc/harness.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include <ulmc/gaussian_oracle.hpp>
#include <ulmc/girsanov.hpp>
#include <ulmc/integrator.hpp>
#include <ulmc/parallel.hpp>
#include <ulmc/rng.hpp>
#include <ulmc/schedules.hpp>
#include <ulmc/targets.hpp>

// Each criterion below pins its tolerance next to the measurement and reports
// the observed numbers in CriterionResult::detail. Gates are never adjusted
// at runtime.

namespace ulmc {
namespace {

using V = Vec<double>;
using M = Mat<double>;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// 1. One-step transition of the sampler vs the closed-form linear-Gaussian
///    kernel: deterministic part and noise covariance to 1e-12, then a 1e6
///    draw Monte-Carlo check of mean and covariance within four standard
///    errors.
CriterionResult criterion_integrator_exactness(int n_threads) {
  CriterionResult r{1, "integrator-exactness", false, "", 0};
  const auto target = make_builtin<double>("gaussian", 2, {1.0, 3.0});

  double analytic_gap = 0;
  const std::vector<std::pair<double, double>> grid = {
      {1.0, 0.1}, {2.0, 0.5}, {std::sqrt(2.0), 0.01}, {0.7, 0.25}};
  V x0(2), v0(2);
  x0 << 0.3, -0.2;
  v0 << 0.1, 0.4;
  for (const auto& [gamma, h] : grid) {
    const auto sc = step_coefficients<double>(gamma, h);
    const auto kernel = kernel_from_quadratic<double>(*target, gamma, h);
    PhasePoint<double> p{x0, v0};
    const auto stepped = ulmc_step<double>(p, *target, sc, V::Zero(4));
    V z(4);
    z << x0, v0;
    const V pred = kernel.A * z;
    analytic_gap = std::max(analytic_gap,
                            (stepped.x - pred.head(2)).cwiseAbs().maxCoeff());
    analytic_gap = std::max(analytic_gap,
                            (stepped.v - pred.tail(2)).cwiseAbs().maxCoeff());

    const double l11 = sc.chol(0, 0), l21 = sc.chol(1, 0), l22 = sc.chol(1, 1);
    M noise_cov = M::Zero(4, 4);
    noise_cov.topLeftCorner(2, 2) = l11 * l11 * M::Identity(2, 2);
    noise_cov.topRightCorner(2, 2) = l11 * l21 * M::Identity(2, 2);
    noise_cov.bottomLeftCorner(2, 2) = l11 * l21 * M::Identity(2, 2);
    noise_cov.bottomRightCorner(2, 2) =
        (l21 * l21 + l22 * l22) * M::Identity(2, 2);
    analytic_gap =
        std::max(analytic_gap, (noise_cov - kernel.Q).cwiseAbs().maxCoeff());
  }

  const double gamma = 1.4, h = 0.25;
  const auto sc = step_coefficients<double>(gamma, h);
  const auto kernel = kernel_from_quadratic<double>(*target, gamma, h);
  const Eigen::Index n = 1000000;
  M draws(4, n);
  parallel_for(n, n_threads, [&](Eigen::Index b, Eigen::Index e) {
    V noise(4);
    for (Eigen::Index c = b; c < e; ++c) {
      CounterRng rng(101, std::uint32_t(c));
      rng.fill_normal(1, noise);
      const auto q = ulmc_step<double>(PhasePoint<double>{x0, v0}, *target, sc, noise);
      draws.col(c).head(2) = q.x;
      draws.col(c).tail(2) = q.v;
    }
  });
  V z(4);
  z << x0, v0;
  const V pred_mean = kernel.A * z;
  const V mean = draws.rowwise().mean();
  double mean_z = 0;
  for (int i = 0; i < 4; ++i) {
    mean_z = std::max(mean_z, std::abs(mean[i] - pred_mean[i]) /
                                  std::sqrt(kernel.Q(i, i) / double(n)));
  }
  const M centered = draws.colwise() - mean;
  const M cov = centered * centered.transpose() / double(n - 1);
  double cov_z = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double se = std::sqrt((kernel.Q(i, i) * kernel.Q(j, j) +
                                   kernel.Q(i, j) * kernel.Q(i, j)) /
                                  double(n));
      cov_z = std::max(cov_z, std::abs(cov(i, j) - kernel.Q(i, j)) / se);
    }
  }

  r.pass = analytic_gap <= 1e-12 && mean_z <= 4.0 && cov_z <= 4.0;
  r.detail = "analytic gap " + num(analytic_gap) + " <= 1e-12; MC z-scores mean " +
             num(mean_z) + ", cov " + num(cov_z) + " <= 4 at 1e6 draws";
  return r;
}

/// 2. Stationary bias of the chain on the standard 1-d Gaussian decays as
///    h^2: log-log slope over four step sizes within 2.0 +/- 0.2.
CriterionResult criterion_stationary_bias(int) {
  CriterionResult r{2, "stationary-bias-order", false, "", 0};
  const auto target = make_builtin<double>("gaussian", 1);
  const auto pi = continuous_stationary_law<double>(*target);
  const double gamma = std::sqrt(2.0);
  std::vector<double> lh, lkl;
  for (const double h : {0.02, 0.01, 0.005, 0.0025}) {
    const auto st =
        stationary_law<double>(kernel_from_quadratic<double>(*target, gamma, h));
    lh.push_back(std::log(h));
    lkl.push_back(std::log(gaussian_kl<double>(st, pi)));
  }
  const double slope = ols_slope(lh, lkl);
  r.pass = std::abs(slope - 2.0) <= 0.2;
  r.detail = "bias slope " + num(slope) + " within 2.0 +/- 0.2";
  return r;
}

std::string study_detail(const StudyResult& res) {
  std::string s = "slope " + num(res.slope) + " in [" + num(res.window_lo) + ", " +
                  num(res.window_hi) + "]; N* =";
  for (const auto& p : res.points) s += " " + std::to_string(p.n_star);
  return s;
}

/// 3. Exact-oracle iteration counts on standard Gaussians grow like sqrt(d):
///    bisected N* over d in {1..32} at eps = 0.3, slope within 0.5 +/- 0.15.
CriterionResult criterion_dimension_scaling(int) {
  CriterionResult r{3, "dimension-scaling", false, "", 0};
  const auto res =
      kl_scaling_study("d", {1, 2, 4, 8, 16, 32}, 1, 0.3, 0.5, 1e4);
  r.pass = std::abs(res.slope - 0.5) <= 0.15;
  r.detail = study_detail(res);
  return r;
}

/// 4. Iteration counts scale like 1/eps: bisected N* at d = 4 over
///    eps in {0.4, 0.2, 0.1, 0.05}, slope of log N vs log(1/eps) within
///    1.0 +/- 0.2.
CriterionResult criterion_accuracy_scaling(int) {
  CriterionResult r{4, "accuracy-scaling", false, "", 0};
  const auto res =
      kl_scaling_study("eps", {0.4, 0.2, 0.1, 0.05}, 4, 0.3, 0.5, 1e4);
  r.pass = std::abs(res.slope - 1.0) <= 0.2;
  r.detail = study_detail(res);
  return r;
}

/// 5. Contraction rate of the noise-free twisted mean map: the h -> 0
///    extrapolation of (1 - Lip)/h equals m/sqrt(2L) within 10% for
///    (m, L) = (1, 1) and (1, 4) at gamma = sqrt(2L).
CriterionResult criterion_contraction_rate(int) {
  CriterionResult r{5, "contraction-rate", false, "", 0};
  struct Case {
    double m, L;
    std::vector<double> spectrum;
  };
  const std::vector<Case> cases = {{1.0, 1.0, {1.0}}, {1.0, 4.0, {1.0, 4.0}}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto target = make_builtin<double>(
        "gaussian", Eigen::Index(c.spectrum.size()), c.spectrum);
    const double gamma = std::sqrt(2.0 * c.L);
    const std::vector<V> probes = {V::Zero(target->dim())};
    const auto rate = [&](double h) {
      return (1.0 - lipschitz_estimate<double>(*target, gamma, h, probes)) / h;
    };
    const double extrapolated = 2.0 * rate(0.005) - rate(0.01);
    const double ref = c.m / std::sqrt(2.0 * c.L);
    const bool ok = std::abs(extrapolated - ref) <= 0.1 * ref;
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += "(m=" + num(c.m) + ", L=" + num(c.L) + ") rate " + num(extrapolated) +
              " vs " + num(ref);
  }
  r.pass = pass;
  r.detail = detail + " (10% gate)";
  return r;
}

/// 6. The log-Sobolev constant of the twisted law along the exact chain
///    stays below its decay envelope: nonpositive violation margin for
///    m = L = 1, gamma = sqrt(2), h = 0.005, N = 2000, from a 4x-inflated
///    start.
CriterionResult criterion_trajectory_lsi(int) {
  CriterionResult r{6, "trajectory-lsi", false, "", 0};
  const auto target = make_builtin<double>("gaussian", 1);
  GaussianLaw<double> init;
  init.mean = V::Zero(2);
  init.cov = 4.0 * M::Identity(2, 2);
  const auto rep = lsi_trajectory_check<double>(*target, std::sqrt(2.0), 0.005,
                                                2000, init);
  r.pass = rep.max_margin <= 0.0;
  r.detail = "max margin " + num(rep.max_margin) + " <= 0";
  return r;
}

/// 7. The Monte-Carlo path-measure bound dominates the exact order-2 Renyi
///    divergence between the chain and diffusion endpoint laws on the 1-d
///    standard Gaussian, horizon 1, h in {0.04, 0.02, 0.01}, 1e4 paths.
CriterionResult criterion_path_bound(int n_threads) {
  CriterionResult r{7, "path-bound-dominance", false, "", 0};
  const auto target = make_builtin<double>("gaussian", 1);
  const double gamma = std::sqrt(2.0);
  GaussianLaw<double> init;
  init.mean = V::Zero(2);
  init.cov = M::Identity(2, 2);
  init.cov(0, 0) = 1.0 / 3.0;
  bool pass = true;
  std::string detail = "bound/exact ratios:";
  for (const double h : {0.04, 0.02, 0.01}) {
    const std::int64_t n = std::llround(1.0 / h);
    const auto stats = simulate_interpolated_pair<double>(
        *target, gamma, h, 1.0, 16, 20260816, 10000, init, n_threads);
    const double bound = renyi_path_bound<double>(stats, 1.0, gamma).value;
    const auto disc = propagate_law<double>(
        init, kernel_from_quadratic<double>(*target, gamma, h), n);
    const auto cont = continuous_law<double>(*target, gamma, 1.0, init);
    const double exact = gaussian_renyi<double>(2.0, disc, cont);
    pass = pass && exact > 0 && bound >= exact;
    detail += " " + num(bound / exact);
  }
  r.pass = pass;
  r.detail = detail + " (all >= 1 required)";
  return r;
}

/// 8. Fine-step propagation decays the hypocoercive functional at at least
///    (1 - 0.05) / (10 C_lsi sqrt(2L)) over t in [0, 2] on the standard
///    Gaussian with gamma = 2 sqrt(2), h = 1e-4.
CriterionResult criterion_lyapunov_decay(int) {
  CriterionResult r{8, "lyapunov-decay", false, "", 0};
  const auto target = make_builtin<double>("gaussian", 1);
  const double gamma = 2.0 * std::sqrt(2.0), h = 1e-4, L = 1.0;
  const auto kernel = kernel_from_quadratic<double>(*target, gamma, h);
  const auto pi = continuous_stationary_law<double>(*target);
  GaussianLaw<double> law;
  law.mean = V::Zero(2);
  law.cov = M::Identity(2, 2);
  law.cov(0, 0) = 1.0 / 3.0;
  const double f0 = lyapunov_functional<double>(law, pi, L);
  law = propagate_law<double>(law, kernel, 20000);
  const double f2 = lyapunov_functional<double>(law, pi, L);
  const double rate = std::log(f0 / f2) / 2.0;
  const double c_lsi = 1.0;  // targets N(0, 1/m) with m = 1
  const double required = 0.95 / (10.0 * c_lsi * std::sqrt(2.0 * L));
  r.pass = f2 < f0 && rate >= required;
  r.detail = "decay rate " + num(rate) + " >= " + num(required);
  return r;
}

/// 9. Tail validators at their default multipliers: the running-sup bound for
///    Brownian motion, and iterate-norm sub-Gaussianity on the Gaussian and
///    heavy-tailed targets, d = 2, 1e4 trials each.
CriterionResult criterion_tail_validators(int n_threads) {
  CriterionResult r{9, "tail-validators", false, "", 0};
  const auto brownian =
      tail_validator_brownian<double>(2, 0.01, 10000, 20260816, n_threads);

  const auto gauss = make_builtin<double>("gaussian", 2);
  SchedulePlan<double> plan;
  plan.gamma = std::sqrt(2.0);
  plan.h = 0.01;
  plan.N = 1000;
  plan.T = 10.0;
  plan.init_beta = std::min(1.0, plan.gamma / plan.T);
  ModifiedTargetParams<double> params;
  params.beta = plan.init_beta;
  params.S_radius = std::sqrt(2.0);
  const auto rep_g = tail_validator_iterates<double>(gauss, plan, params, 10000,
                                                     11, 5.0, {0.1, 0.01}, n_threads);

  const auto hyper = make_builtin<double>("hyperbolic", 2);
  const auto plan_h = plan_renyi_poincare<double>(2.0, 1.0, 1.0, 2, 0.3, 0.5, 0.0);
  ModifiedTargetParams<double> params_h;
  params_h.beta = plan_h.gamma / plan_h.T;
  params_h.S_radius = 2.0 * std::sqrt(2.0);
  const auto rep_h = tail_validator_iterates<double>(hyper, plan_h, params_h, 10000,
                                                     12, 5.0, {0.1, 0.01}, n_threads);

  r.pass = brownian.pass && rep_g.pass && rep_h.pass;
  r.detail = "brownian max gap " + num(brownian.max_gap) +
             " <= 0; iterate multipliers needed: gaussian " +
             num(rep_g.smallest_passing) + ", hyperbolic " +
             num(rep_h.smallest_passing) + " (default 5)";
  return r;
}

/// 10. Quantitative reproduction is excluded for: log-Sobolev-constant
///     scaling on genuinely non-log-concave targets, the full d^2 iteration
///     complexity of the weak-smoothness planner in high dimension, and
///     head-to-head literature comparisons — all beyond desk scale. They are
///     covered by formula-level planner gates instead, checked here.
CriterionResult criterion_planner_formulas(int) {
  CriterionResult r{10, "planner-formulas", false, "", 0};
  bool pass = true;

  // (a) Dimension-proportional Poincare constants give a cubic iteration law.
  std::vector<double> ld, ln;
  for (const double d : {2.0, 4.0, 8.0}) {
    const auto plan = plan_renyi_poincare<double>(d, 1.0, 1.0, Eigen::Index(d),
                                                  0.3, 0.5, 0.0);
    ld.push_back(std::log(d));
    ln.push_back(std::log(plan.N_exact));
  }
  const double cubic = ols_slope(ld, ln);
  pass = pass && std::abs(cubic - 3.0) <= 0.3;

  // (b) The TV planner's step decays as 1/sqrt(d) once logs are frozen.
  PlannerConstants<double> frozen;
  frozen.freeze_h_logs = true;
  const auto p100 = plan_tv_lsi<double>(1.0, 1.0, 100, 0.3, frozen);
  const auto p25 = plan_tv_lsi<double>(1.0, 1.0, 25, 0.3, frozen);
  const double dratio = p100.h / p25.h;
  pass = pass && std::abs(dratio - 0.5) <= 1e-12;

  // (c) Accuracy scale covariance: iteration displays obey the documented
  //     homogeneity degree in eps (1 for KL/TV with frozen logs, 1/s for the
  //     weak-smoothness planner, exactly).
  const double t = 0.3;
  PlannerConstants<double> frozen2;
  frozen2.freeze_h_logs = true;
  frozen2.freeze_T_logs = true;
  const auto ka = plan_kl_strongly_logconcave<double>(1.0, 2.0, 3, 0.5, frozen2);
  const auto kb =
      plan_kl_strongly_logconcave<double>(1.0, 2.0, 3, 0.5 * t, frozen2);
  pass = pass && std::abs(kb.N_exact * t / ka.N_exact - 1.0) <= 1e-12;
  const auto ta = plan_tv_lsi<double>(1.5, 2.0, 3, 0.5, frozen2);
  const auto tb = plan_tv_lsi<double>(1.5, 2.0, 3, 0.5 * t, frozen2);
  pass = pass && std::abs(tb.N_exact * t / ta.N_exact - 1.0) <= 1e-12;
  double renyi_gap = 0;
  for (const double s : {1.0, 0.5}) {
    const auto ra = plan_renyi_poincare<double>(2.0, 1.0, s, 3, 0.5, 0.4, 0.1);
    const auto rb = plan_renyi_poincare<double>(2.0, 1.0, s, 3, 0.5 * t, 0.4, 0.1);
    renyi_gap = std::max(
        renyi_gap, std::abs(rb.N_exact * std::pow(t, 1.0 / s) / ra.N_exact - 1.0));
  }
  pass = pass && renyi_gap <= 1e-12;

  r.pass = pass;
  r.detail = "cubic slope " + num(cubic) + " within 3.0 +/- 0.3; step d-ratio " +
             num(dratio) + " == 0.5; accuracy homogeneity gaps <= " +
             num(std::max(renyi_gap, 1e-16)) +
             "; excluded at desk scale: non-log-concave LSI scaling, "
             "high-dimensional d^2 complexity, literature comparisons";
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, int n_threads) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = criterion_integrator_exactness(n_threads); break;
    case 2: r = criterion_stationary_bias(n_threads); break;
    case 3: r = criterion_dimension_scaling(n_threads); break;
    case 4: r = criterion_accuracy_scaling(n_threads); break;
    case 5: r = criterion_contraction_rate(n_threads); break;
    case 6: r = criterion_trajectory_lsi(n_threads); break;
    case 7: r = criterion_path_bound(n_threads); break;
    case 8: r = criterion_lyapunov_decay(n_threads); break;
    case 9: r = criterion_tail_validators(n_threads); break;
    case 10: r = criterion_planner_formulas(n_threads); break;
    default:
      throw DomainError("run_criterion: id must lie in 1.." +
                        std::to_string(criterion_count));
  }
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace ulmc
