#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <ulmc/gaussian_oracle.hpp>
#include <ulmc/girsanov.hpp>
#include <ulmc/schedules.hpp>
#include <ulmc/targets.hpp>

using V = ulmc::Vec<double>;
using M = ulmc::Mat<double>;

namespace {

class ZeroTarget final : public ulmc::Target<double> {
 public:
  explicit ZeroTarget(Eigen::Index d) : Target("zero", d, flat_info()) {}
  double value(const V&) const override { return 0.0; }
  V gradient(const V& x) const override { return V::Zero(x.size()); }

 private:
  static ulmc::RegularityInfo<double> flat_info() {
    ulmc::RegularityInfo<double> info;
    info.L = 0.0;
    info.m = 0.0;
    return info;
  }
};

ulmc::GaussianLaw<double> phase_law(double var_x, double var_v, Eigen::Index d) {
  ulmc::GaussianLaw<double> law;
  law.mean = V::Zero(2 * d);
  law.cov = M::Identity(2 * d, 2 * d);
  law.cov.topLeftCorner(d, d) *= var_x;
  law.cov.bottomRightCorner(d, d) *= var_v;
  return law;
}

}  // namespace

TEST_CASE("interpolated simulation") {
  SUBCASE("zero potential accumulates no drift gap") {
    ZeroTarget flat(2);
    const auto stats = ulmc::simulate_interpolated_pair<double>(
        flat, 1.0, 0.1, 0.5, 8, 99, 200, phase_law(1.0, 1.0, 2));
    CHECK(stats.drift_gap_integral.cwiseAbs().maxCoeff() == 0.0);
    CHECK(stats.sup_increment.minCoeff() >= 0.0);
    CHECK(stats.n_windows == 5);
    const auto rep = ulmc::renyi_path_bound<double>(stats, 1.0, 1.0);
    CHECK(rep.value == 0.0);
    CHECK(rep.lo == 0.0);
    CHECK(rep.hi == 0.0);
    CHECK_FALSE(rep.overflow);
  }
  SUBCASE("bad horizons and substep counts are rejected") {
    ZeroTarget flat(1);
    CHECK_THROWS_AS(ulmc::simulate_interpolated_pair<double>(flat, 1.0, 0.3, 1.0, 8,
                                                             1, 16),
                    ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::simulate_interpolated_pair<double>(flat, 1.0, 0.1, 1.0, 4,
                                                             1, 16),
                    ulmc::DomainError);
  }
  SUBCASE("runs are deterministic and thread-count independent") {
    const auto target = ulmc::make_builtin<double>("gaussian", 1);
    const auto a = ulmc::simulate_interpolated_pair<double>(*target, 1.0, 0.1, 0.4,
                                                            8, 7, 64, {}, 1);
    const auto b = ulmc::simulate_interpolated_pair<double>(*target, 1.0, 0.1, 0.4,
                                                            8, 7, 64, {}, 4);
    CHECK((a.drift_gap_integral - b.drift_gap_integral).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.sup_increment - b.sup_increment).cwiseAbs().maxCoeff() == 0.0);
    const auto c = ulmc::simulate_interpolated_pair<double>(*target, 1.0, 0.1, 0.4,
                                                            8, 8, 64, {}, 1);
    CHECK((c.drift_gap_integral - a.drift_gap_integral).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("mean drift gap falls at least quadratically in the window length") {
    const auto target = ulmc::make_builtin<double>("gaussian", 1);
    std::vector<double> means;
    for (double h : {0.1, 0.05, 0.025}) {
      const auto stats = ulmc::simulate_interpolated_pair<double>(
          *target, std::sqrt(2.0), h, 1.0, 32, 515, 5000, phase_law(1.0 / 3, 1.0, 1),
          4);
      means.push_back(stats.drift_gap_integral.mean());
    }
    CHECK(means[0] >= 2.0 * means[1]);
    CHECK(means[1] >= 2.0 * means[2]);
  }
  SUBCASE("window-boundary law composes exactly to the one-step kernel") {
    // M frozen-drift OU substeps must compose to the single-step update:
    // free part by the semigroup law, the gradient forcing to (c_xg, c_vg)
    // at the window length, and the noise to the window covariance.
    const double gamma = 1.3, h = 0.25;
    const int m_sub = 16;
    const auto whole = ulmc::step_coefficients<double>(gamma, h);
    const auto sub = ulmc::step_coefficients<double>(gamma, h / m_sub);
    Eigen::Matrix2d a_sub, a_acc, q_acc;
    a_sub << 1.0, sub.c_xv, 0.0, sub.eta;
    Eigen::Vector2d f_acc(0.0, 0.0), f_sub(sub.c_xg, sub.c_vg);
    a_acc.setIdentity();
    q_acc.setZero();
    for (int m = 0; m < m_sub; ++m) {
      f_acc = a_sub * f_acc + f_sub;
      q_acc = a_sub * q_acc * a_sub.transpose() + sub.cov;
      a_acc = a_sub * a_acc;
    }
    CHECK(a_acc(0, 1) == doctest::Approx(whole.c_xv).epsilon(1e-13));
    CHECK(a_acc(1, 1) == doctest::Approx(whole.eta).epsilon(1e-13));
    CHECK(a_acc(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(a_acc(1, 0)) <= 1e-15);
    CHECK(f_acc[0] == doctest::Approx(whole.c_xg).epsilon(1e-12));
    CHECK(f_acc[1] == doctest::Approx(whole.c_vg).epsilon(1e-12));
    CHECK(q_acc(0, 0) == doctest::Approx(whole.cov(0, 0)).epsilon(1e-12));
    CHECK(q_acc(0, 1) == doctest::Approx(whole.cov(0, 1)).epsilon(1e-12));
    CHECK(q_acc(1, 1) == doctest::Approx(whole.cov(1, 1)).epsilon(1e-12));

    // With the gradient frozen at the window start, the composed map on a
    // quadratic target is therefore the exact transition kernel.
    const auto quad = ulmc::make_builtin<double>("gaussian", 1, {2.5});
    const auto kernel = ulmc::kernel_from_quadratic<double>(*quad, gamma, h);
    CHECK(kernel.A(0, 0) == doctest::Approx(1.0 - f_acc[0] * 2.5).epsilon(1e-12));
    CHECK(kernel.A(1, 0) == doctest::Approx(-f_acc[1] * 2.5).epsilon(1e-12));
  }
  SUBCASE("trapezoid refinement changes the integral below quadrature tolerance") {
    // Re-walk the module's M = 64 trajectories (same noise keying) and
    // accumulate the trapezoid on the fine grid and on every second node;
    // both live on the same path, so the gap is pure quadrature error.
    const auto target = ulmc::make_builtin<double>("gaussian", 1, {1.7});
    const double gamma = 1.2, h = 0.1, T = 0.4;
    const int m_fine = 64;
    const Eigen::Index paths = 200;
    const std::uint64_t seed = 424242;
    const auto init = phase_law(0.4, 1.0, 1);
    const auto stats = ulmc::simulate_interpolated_pair<double>(
        *target, gamma, h, T, m_fine, seed, paths, init);

    const double delta = h / m_fine;
    const auto sc = ulmc::step_coefficients<double>(gamma, delta);
    const M factor = ulmc::cholesky_spd<double>(init.cov, "test");
    double fine_sum = 0.0, coarse_sum = 0.0;
    for (Eigen::Index p = 0; p < paths; ++p) {
      ulmc::CounterRng rng(seed, std::uint32_t(p));
      V z(2);
      rng.fill_normal(0, z);
      const V phase = init.mean + factor * z;
      double x = phase[0], v = phase[1];
      double fine = 0.0, coarse = 0.0;
      for (int w = 0; w < 4; ++w) {
        const double g = target->gradient(V::Constant(1, x))[0];
        double f_prev = 0.0, f_prev2 = 0.0;
        for (int m = 0; m < m_fine; ++m) {
          rng.fill_normal(std::uint64_t(w) * m_fine + m + 1, z);
          const double xn = x + sc.c_xv * v - sc.c_xg * g + sc.chol(0, 0) * z[0];
          v = sc.eta * v - sc.c_vg * g + sc.chol(1, 0) * z[0] + sc.chol(1, 1) * z[1];
          x = xn;
          const double f =
              std::pow(target->gradient(V::Constant(1, x))[0] - g, 2);
          fine += delta * (f_prev + f) / 2;
          f_prev = f;
          if (m % 2 == 1) {
            coarse += 2 * delta * (f_prev2 + f) / 2;
            f_prev2 = f;
          }
        }
      }
      CHECK(fine == doctest::Approx(stats.drift_gap_integral[p]).epsilon(1e-12));
      fine_sum += fine;
      coarse_sum += coarse;
    }
    CHECK(std::abs(coarse_sum - fine_sum) <= 1e-3 * fine_sum);
  }
}

TEST_CASE("path-measure Renyi bound") {
  const auto target = ulmc::make_builtin<double>("gaussian", 1);
  const double gamma = std::sqrt(2.0), T = 1.0;
  const auto init = phase_law(1.0 / 3, 1.0, 1);

  SUBCASE("dominates the exact divergence between the time-T laws") {
    const double h = 0.01;
    const auto kernel = ulmc::kernel_from_quadratic<double>(*target, gamma, h);
    const auto discrete = ulmc::propagate_law<double>(init, kernel, 100);
    const auto continuous = ulmc::continuous_law<double>(*target, gamma, T, init);
    const double exact = ulmc::gaussian_renyi<double>(2.0, discrete, continuous);
    CHECK(exact == doctest::Approx(5.739680e-6).epsilon(1e-3));

    const auto stats = ulmc::simulate_interpolated_pair<double>(
        *target, gamma, h, T, 32, 20260816, 10000, init, 4);
    const auto rep = ulmc::renyi_path_bound<double>(stats, 1.0, gamma);
    CHECK(rep.value >= exact);
    CHECK(rep.value <= 100 * exact);  // sanity: same order of magnitude
    CHECK(rep.lo <= rep.value);
    CHECK(rep.value <= rep.hi);
    CHECK(rep.lo >= exact / 2);  // interval stays well above zero
  }
  SUBCASE("coupled runs give a bound nonincreasing in the window length") {
    // Equal substep spacing + absolute-substep noise keying => the three
    // runs share Brownian increments and differ only in the freeze grid.
    const double hs[] = {0.04, 0.02, 0.01};
    const int subs[] = {32, 16, 8};
    std::vector<double> bounds, means;
    for (int i = 0; i < 3; ++i) {
      const auto stats = ulmc::simulate_interpolated_pair<double>(
          *target, gamma, hs[i], T, subs[i], 777, 4000, init, 4);
      bounds.push_back(ulmc::renyi_path_bound<double>(stats, 1.0, gamma).value);
      means.push_back(stats.drift_gap_integral.mean());
    }
    CHECK(bounds[0] >= bounds[1]);
    CHECK(bounds[1] >= bounds[2]);
    CHECK(means[0] >= 2.0 * means[1]);
    CHECK(means[1] >= 2.0 * means[2]);
  }
  SUBCASE("overflow is tagged rather than propagated") {
    ulmc::PathStatistic<double> stats;
    stats.drift_gap_integral = V::Constant(200, 1e6);
    stats.sup_increment = M::Zero(200, 1);
    stats.gamma = 1.0;
    stats.seed = 1;
    const auto rep = ulmc::renyi_path_bound<double>(stats, 1.0, 1.0);
    CHECK(rep.overflow);
    CHECK(std::isinf(rep.value));
    CHECK(rep.diagnostic_quantile == doctest::Approx(4e6).epsilon(1e-12));
  }
  SUBCASE("input validation") {
    ulmc::PathStatistic<double> stats;
    stats.drift_gap_integral = V::Zero(50);
    CHECK_THROWS_AS(ulmc::renyi_path_bound<double>(stats, 1.0, 1.0),
                    ulmc::DomainError);
    stats.drift_gap_integral = V::Zero(200);
    CHECK_THROWS_AS(ulmc::renyi_path_bound<double>(stats, 0.5, 1.0),
                    ulmc::DomainError);
  }
}

TEST_CASE("Brownian running-maximum tail validator") {
  SUBCASE("bound holds with margin on the default grid") {
    const auto rep = ulmc::tail_validator_brownian<double>(2, 0.01, 20000, 31, 4);
    CHECK(rep.pass);
    CHECK(rep.eta[0] == 0.0);
    CHECK(rep.empirical[0] == 1.0);
    CHECK(rep.bound[0] == 3.0);
    CHECK(rep.max_gap <= 0.0);
  }
  SUBCASE("the bound curve is invariant under (d, h) -> (2d, h/2)") {
    const auto a = ulmc::tail_validator_brownian<double>(2, 0.01, 20000, 5, 4);
    const auto b = ulmc::tail_validator_brownian<double>(4, 0.005, 20000, 6, 4);
    CHECK((a.eta - b.eta).cwiseAbs().maxCoeff() <= 1e-12);
    // The exceedance laws match in scale but not exactly in distribution
    // (2 chi^2_d vs chi^2_2d), so allow a small absolute gap on top of the
    // Monte-Carlo band.
    for (int i = 0; i < a.eta.size(); ++i) {
      const double band = 3 * (a.mcse[i] + b.mcse[i]) + 4e-3;
      CHECK(std::abs(a.empirical[i] - b.empirical[i]) <= band);
    }
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(ulmc::tail_validator_brownian<double>(2, 0.01, 5000, 1),
                    ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::tail_validator_brownian<double>(0, 0.01, 20000, 1),
                    ulmc::DomainError);
  }
}

TEST_CASE("iterate-norm tail validator") {
  SUBCASE("Gaussian preset passes at the default multiplier") {
    const auto target = ulmc::make_builtin<double>("gaussian", 2);
    ulmc::SchedulePlan<double> plan;
    plan.gamma = std::sqrt(2.0);
    plan.h = 0.01;
    plan.N = 1000;
    plan.T = 10.0;
    plan.init_beta = std::min(1.0, plan.gamma / plan.T);
    ulmc::ModifiedTargetParams<double> params;
    params.beta = plan.init_beta;
    params.S_radius = std::sqrt(2.0);
    const auto rep = ulmc::tail_validator_iterates<double>(target, plan, params,
                                                           10000, 11, 5.0, {0.1, 0.01},
                                                           4);
    CHECK(rep.pass);
    CHECK(rep.smallest_passing <= 1.0);
    CHECK(rep.quantile_x[1] >= rep.quantile_x[0]);  // tighter delta, larger quantile
    CHECK(rep.quantile_v[1] >= rep.quantile_v[0]);
    CHECK(rep.r2_plugin == doctest::Approx(params.beta + 1.0 + 2.0).epsilon(1e-12));
  }
  SUBCASE("hyperbolic preset passes at the heavier-tail multiplier") {
    const auto target = ulmc::make_builtin<double>("hyperbolic", 2);
    const auto plan =
        ulmc::plan_renyi_poincare<double>(2.0, 1.0, 1.0, 2, 0.3, 0.5, 0.0);
    ulmc::ModifiedTargetParams<double> params;
    params.beta = plan.gamma / plan.T;
    params.S_radius = 2.0 * std::sqrt(2.0);
    const auto rep = ulmc::tail_validator_iterates<double>(target, plan, params,
                                                           10000, 12, 10.0,
                                                           {0.1, 0.01}, 4);
    CHECK(rep.pass);
    CHECK(rep.smallest_passing <= 5.0);
  }
  SUBCASE("confidence levels above one half are rejected") {
    const auto target = ulmc::make_builtin<double>("gaussian", 2);
    ulmc::SchedulePlan<double> plan;
    plan.gamma = 1.0;
    plan.h = 0.1;
    plan.N = 10;
    plan.T = 1.0;
    ulmc::ModifiedTargetParams<double> params;
    CHECK_THROWS_AS(ulmc::tail_validator_iterates<double>(target, plan, params, 1000,
                                                          1, 5.0, {0.6}),
                    ulmc::DomainError);
  }
}

TEST_CASE("one-window movement check") {
  SUBCASE("flat potential from rest: only the diffusive term is active") {
    auto flat = std::make_shared<ZeroTarget>(2);
    ulmc::PhasePoint<double> start{V::Zero(2), V::Zero(2)};
    ulmc::MovementOptions<double> opts;
    opts.C = 10.0;
    opts.n_threads = 4;
    const auto rep =
        ulmc::movement_bound_check<double>(*flat, 1.0, 0.2, start, 100000, 21, opts);
    CHECK(rep.pass);
    CHECK(rep.ratio > 0.0);
    CHECK(rep.ratio < 0.5);
  }
  SUBCASE("large initial momentum: kinetic term dominates, bound still holds") {
    const auto target = ulmc::make_builtin<double>("gaussian", 1);
    ulmc::PhasePoint<double> start{V::Zero(1), V::Constant(1, 10.0)};
    ulmc::MovementOptions<double> opts;
    opts.n_threads = 4;
    const auto rep = ulmc::movement_bound_check<double>(*target, 1.0, 0.25, start,
                                                        20000, 22, opts);
    CHECK(rep.pass);
    CHECK(rep.ratio > 0.0);
    CHECK(rep.ratio <= 1.0);
  }
  SUBCASE("halving the window shrinks the exponential moment pathwise") {
    const auto target = ulmc::make_builtin<double>("gaussian", 2);
    V x0(2), v0(2);
    x0 << 0.3, -0.1;
    v0 << 0.5, 0.2;
    ulmc::PhasePoint<double> start{x0, v0};
    ulmc::MovementOptions<double> full;
    full.substeps = 128;
    ulmc::MovementOptions<double> half;
    half.substeps = 64;
    const auto rep_h =
        ulmc::movement_bound_check<double>(*target, 1.5, 0.2, start, 5000, 23, full);
    const auto rep_h2 =
        ulmc::movement_bound_check<double>(*target, 1.5, 0.1, start, 5000, 23, half);
    // Same substep spacing and seeds: the h/2 path is a prefix of the h path.
    CHECK((rep_h2.sups.array() <= rep_h.sups.array() + 1e-14).all());
    // Common-lambda comparison of the exponential moments.
    std::vector<double> a_half(5000);
    for (int i = 0; i < 5000; ++i)
      a_half[std::size_t(i)] = rep_h.lambda * rep_h2.sups[i] * rep_h2.sups[i];
    double acc = 0.0;
    for (double ai : a_half) acc += std::exp(ai);
    const double lme_half = std::log(acc / 5000.0);
    CHECK(lme_half <= rep_h.estimate + 1e-12);
  }
  SUBCASE("input validation") {
    const auto target = ulmc::make_builtin<double>("gaussian", 1);
    ulmc::PhasePoint<double> start{V::Zero(1), V::Zero(1)};
    ulmc::MovementOptions<double> opts;
    opts.lambda_scale = 0.3;
    CHECK_THROWS_AS(
        ulmc::movement_bound_check<double>(*target, 1.0, 0.1, start, 1000, 1, opts),
        ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::movement_bound_check<double>(*target, 0.5, 3.0, start,
                                                       1000, 1),
                    ulmc::DomainError);
    ulmc::PhasePoint<double> bad{V::Zero(2), V::Zero(2)};
    CHECK_THROWS_AS(ulmc::movement_bound_check<double>(*target, 1.0, 0.1, bad, 1000,
                                                       1),
                    ulmc::DimensionError);
  }
}
