#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <ulmc/gaussian_oracle.hpp>
#include <ulmc/integrator.hpp>
#include <ulmc/schedules.hpp>
#include <ulmc/targets.hpp>

using ulmc::PlannerConstants;
using ulmc::SchedulePlan;
using V = ulmc::Vec<double>;
using M = ulmc::Mat<double>;

namespace {

PlannerConstants<double> unit_constants(bool freeze_h = false, bool freeze_T = false) {
  PlannerConstants<double> k;
  k.freeze_h_logs = freeze_h;
  k.freeze_T_logs = freeze_T;
  return k;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("product initialization") {
  SUBCASE("position variance is 1/(2L + beta)") {
    const auto law = ulmc::initialization<double>(1.0, 0.0, 3);
    CHECK(law.cov(0, 0) == 0.5);
    CHECK(law.cov(3, 3) == 1.0);
    CHECK(law.mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK(law.cov(0, 3) == 0.0);
    CHECK(ulmc::initialization<double>(1.0, 1.0, 1).cov(0, 0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("Renyi divergence to the Gaussian stationary law stays linear in d") {
    const Eigen::Index d = 4;
    const auto target = ulmc::make_builtin<double>("gaussian", d);
    const auto pi_law = ulmc::continuous_stationary_law<double>(*target);
    const double r0 =
        ulmc::gaussian_renyi<double>(2.0, ulmc::initialization<double>(1.0, 0.0, d),
                                     pi_law);
    const double r1 =
        ulmc::gaussian_renyi<double>(2.0, ulmc::initialization<double>(1.0, 1.0, d),
                                     pi_law);
    CHECK(r0 == doctest::Approx(0.5754).epsilon(1e-3));
    CHECK(r1 == doctest::Approx(1.1756).epsilon(1e-3));
    CHECK(r1 <= 10.0 * (1.0 + double(d)));
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(ulmc::initialization<double>(0.0, 0.0, 1), ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::initialization<double>(1.0, -0.5, 1), ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::initialization<double>(1.0, 0.0, 0), ulmc::DomainError);
  }
}

TEST_CASE("KL planner for strongly log-concave targets") {
  SUBCASE("worked unit example with the h-side log frozen") {
    const auto plan =
        ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 1, 0.5,
                                                  unit_constants(true));
    CHECK(plan.h == 0.5);
    CHECK(plan.T == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(plan.N == 3);
    CHECK(plan.gamma == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(plan.metric == ulmc::Metric::KL);
    CHECK(plan.warnings.empty());
    CHECK(plan.init_beta == doctest::Approx(plan.gamma / plan.T).epsilon(1e-15));
    CHECK(plan.init_varsigma ==
          doctest::Approx(1.0 / (2.0 + plan.init_beta)).epsilon(1e-15));
  }
  SUBCASE("worked example with live logs") {
    const auto plan = ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 1, 0.3);
    CHECK(plan.h == doctest::Approx(0.11421).epsilon(1e-4));
    CHECK(plan.T == doctest::Approx(2.4079).epsilon(1e-4));
    CHECK(plan.N == 22);
    const auto plan2 = ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 2, 0.3);
    CHECK(plan2.h == doctest::Approx(0.06595).epsilon(1e-3));
    CHECK(plan2.N == 48);
  }
  SUBCASE("pre-log step size for an ill-conditioned high-dimensional case") {
    const auto plan =
        ulmc::plan_kl_strongly_logconcave<double>(1.0, 4.0, 16, 0.1,
                                                  unit_constants(true));
    CHECK(plan.h == doctest::Approx(6.25e-3).epsilon(1e-12));
  }
  SUBCASE("frozen-log iteration count scales as sqrt(d)") {
    const auto k = unit_constants(true, true);
    const auto p1 = ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 1, 0.25, k);
    const auto p4 = ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 4, 0.25, k);
    CHECK(p4.N_exact == doctest::Approx(2.0 * p1.N_exact).epsilon(1e-12));
  }
  SUBCASE("stability guard clamps large steps and warns") {
    const auto plan =
        ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 1, 0.999,
                                                  unit_constants(true));
    CHECK(plan.h == doctest::Approx(2.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-12));
    CHECK(plan.warnings.size() == 1);
    CHECK(plan.N == std::int64_t(std::ceil(plan.T / plan.h - 1e-9)));
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(ulmc::plan_kl_strongly_logconcave<double>(0.0, 1.0, 1, 0.5),
                    ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::plan_kl_strongly_logconcave<double>(2.0, 1.0, 1, 0.5),
                    ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 0, 0.5),
                    ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 1, 0.0),
                    ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 1, 1.5),
                    ulmc::DomainError);
  }
}

TEST_CASE("TV planner under a log-Sobolev constant") {
  SUBCASE("unit inputs give a one-step unit plan") {
    const auto plan = ulmc::plan_tv_lsi<double>(1.0, 1.0, 1, 1.0, unit_constants(true));
    CHECK(plan.h == 1.0);
    CHECK(plan.T == 1.0);
    CHECK(plan.N == 1);
    CHECK(plan.gamma == 1.0);
    CHECK(plan.metric == ulmc::Metric::TV);
  }
  SUBCASE("step size scales as the inverse square root of the dimension") {
    const auto k = unit_constants(true);
    const auto p100 = ulmc::plan_tv_lsi<double>(1.0, 1.0, 100, 0.3, k);
    const auto p25 = ulmc::plan_tv_lsi<double>(1.0, 1.0, 25, 0.3, k);
    CHECK(p100.h == doctest::Approx(0.5 * p25.h).epsilon(1e-12));
  }
  SUBCASE("with C_lsi = 1/m the horizon matches the strongly-log-concave plan") {
    const auto tv = ulmc::plan_tv_lsi<double>(1.0, 1.0, 4, 0.3);
    const auto kl = ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, 4, 0.3);
    CHECK(tv.T == doctest::Approx(kl.T).epsilon(1e-12));
  }
  SUBCASE("friction tracks sqrt(L)") {
    CHECK(ulmc::plan_tv_lsi<double>(1.0, 4.0, 1, 0.5).gamma ==
          doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(ulmc::plan_tv_lsi<double>(0.0, 1.0, 1, 0.5), ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::plan_tv_lsi<double>(1.0, 0.0, 1, 0.5), ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::plan_tv_lsi<double>(1.0, 1.0, 1, 1.5), ulmc::DomainError);
  }
}

TEST_CASE("Poincare decay rate") {
  SUBCASE("unit example") {
    CHECK(ulmc::poincare_rate<double>(1.0, 0.0, 1.0, 1.0) == 0.5);
  }
  SUBCASE("numeric argmax sits at sqrt(C_pi^{-1} + R^2)") {
    const double pairs[][2] = {{1.0, 0.0}, {2.0, 0.7}, {0.5, 1.3}};
    for (const auto& pr : pairs) {
      const double c_pi = pr[0], R = pr[1];
      // Golden-section search on [1e-3, 50].
      const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
      double a = 1e-3, b = 50.0;
      double c = b - gr * (b - a), d = a + gr * (b - a);
      for (int it = 0; it < 200; ++it) {
        if (ulmc::poincare_rate<double>(c_pi, R, c, 1.0) >
            ulmc::poincare_rate<double>(c_pi, R, d, 1.0)) {
          b = d;
        } else {
          a = c;
        }
        c = b - gr * (b - a);
        d = a + gr * (b - a);
      }
      const double argmax = 0.5 * (a + b);
      CHECK(std::abs(argmax - std::sqrt(1.0 / c_pi + R * R)) <= 1e-6);
    }
  }
  SUBCASE("vanishes in both friction limits") {
    CHECK(ulmc::poincare_rate<double>(1.0, 0.0, 1e-9, 1.0) < 1e-8);
    CHECK(ulmc::poincare_rate<double>(1.0, 0.0, 1e9, 1.0) < 1e-8);
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(ulmc::poincare_rate<double>(0.0, 0.0, 1.0, 1.0),
                    ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::poincare_rate<double>(1.0, -1.0, 1.0, 1.0),
                    ulmc::DomainError);
    CHECK_THROWS_AS(ulmc::poincare_rate<double>(1.0, 0.0, 0.0, 1.0),
                    ulmc::DomainError);
  }
}

TEST_CASE("Renyi planner under a Poincare constant") {
  SUBCASE("worked unit example before logs") {
    const auto plan = ulmc::plan_renyi_poincare<double>(1.0, 1.0, 1.0, 1, 1.0, 0.5,
                                                        0.0, unit_constants(true));
    CHECK(plan.gamma == 1.0);
    CHECK(plan.h == doctest::Approx(0.17678).epsilon(1e-4));
    CHECK(plan.h == doctest::Approx(0.25 * std::sqrt(0.5)).epsilon(1e-12));
    CHECK(plan.q == 1.5);
    CHECK(plan.metric == ulmc::Metric::Renyi);
    CHECK(plan.T == doctest::Approx(double(plan.N) * plan.h).epsilon(1e-15));
    CHECK(plan.N == std::int64_t(std::ceil(plan.N_exact - 1e-9)));
  }
  SUBCASE("halving the accuracy multiplies the iteration display by 2^(1/s)") {
    for (double s : {1.0, 0.5}) {
      const auto a = ulmc::plan_renyi_poincare<double>(1.0, 1.0, s, 2, 0.3, 0.5, 0.0);
      const auto b = ulmc::plan_renyi_poincare<double>(1.0, 1.0, s, 2, 0.15, 0.5, 0.0);
      CHECK(b.N_exact ==
            doctest::Approx(std::pow(2.0, 1.0 / s) * a.N_exact).epsilon(1e-12));
    }
  }
  SUBCASE("dimension-proportional Poincare constants give a cubic iteration law") {
    std::vector<double> ds, ns;
    for (double d : {2.0, 4.0, 8.0}) {
      const auto plan = ulmc::plan_renyi_poincare<double>(d, 1.0, 1.0,
                                                          Eigen::Index(d), 0.3, 0.5,
                                                          0.0);
      ds.push_back(d);
      ns.push_back(plan.N_exact);
    }
    CHECK(std::abs(loglog_slope(ds, ns) - 3.0) <= 0.3);
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(
        ulmc::plan_renyi_poincare<double>(1.0, 1.0, 0.0, 1, 0.5, 0.5, 0.0),
        ulmc::DomainError);
    CHECK_THROWS_AS(
        ulmc::plan_renyi_poincare<double>(1.0, 1.0, 1.2, 1, 0.5, 0.5, 0.0),
        ulmc::DomainError);
    CHECK_THROWS_AS(
        ulmc::plan_renyi_poincare<double>(1.0, 1.0, 1.0, 1, 0.5, 0.0, 0.0),
        ulmc::DomainError);
    CHECK_THROWS_AS(
        ulmc::plan_renyi_poincare<double>(1.0, 1.0, 1.0, 1, 0.5, 1.0, 0.0),
        ulmc::DomainError);
    CHECK_THROWS_AS(
        ulmc::plan_renyi_poincare<double>(0.0, 1.0, 1.0, 1, 0.5, 0.5, 0.0),
        ulmc::DomainError);
  }
}

TEST_CASE("path-measure step bound") {
  SUBCASE("unit substitutions") {
    const auto k = unit_constants(true);
    CHECK(ulmc::girsanov_step_bound<double>(1.0, 1.0, 1.0, 1.0, 1.0, 1, 0.0, 1.0,
                                            k) == 1.0);
    CHECK(ulmc::girsanov_step_bound<double>(1.0, 1.0, 1.0, 4.0, 1.0, 4, 0.0, 1.0,
                                            k) == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("doubling the order halves the step at s = 1") {
    const auto k = unit_constants(true);
    const double h1 =
        ulmc::girsanov_step_bound<double>(2.0, 1.5, 1.0, 3.0, 1.0, 2, 0.4, 0.3, k);
    const double h2 =
        ulmc::girsanov_step_bound<double>(2.0, 1.5, 1.0, 3.0, 2.0, 2, 0.4, 0.3, k);
    CHECK(h2 == doctest::Approx(0.5 * h1).epsilon(1e-12));
  }
  SUBCASE("proportional to the strongly-log-concave step at fixed horizon") {
    const auto k = unit_constants(true, true);
    const double T = std::log(4.0);
    double ratio0 = 0.0;
    for (Eigen::Index d : {Eigen::Index(1), Eigen::Index(4), Eigen::Index(16)}) {
      for (double eps : {0.5, 0.25}) {
        const double hg = ulmc::girsanov_step_bound<double>(
            2.0 * std::sqrt(2.0), 1.0, 1.0, T, 2.0, d, 0.0, eps, k);
        const double hk =
            ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, d, eps, k).h;
        const double ratio = hg / hk;
        if (ratio0 == 0.0) ratio0 = ratio;
        CHECK(ratio == doctest::Approx(ratio0).epsilon(1e-10));
      }
    }
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(
        ulmc::girsanov_step_bound<double>(1.0, 1.0, 1.0, 1.0, 0.5, 1, 0.0, 1.0),
        ulmc::DomainError);
    CHECK_THROWS_AS(
        ulmc::girsanov_step_bound<double>(1.0, 1.0, 1.0, 1.0, 1.0, 1, -1.0, 1.0),
        ulmc::DomainError);
    CHECK_THROWS_AS(
        ulmc::girsanov_step_bound<double>(1.0, 1.0, 2.0, 1.0, 1.0, 1, 0.0, 1.0),
        ulmc::DomainError);
  }
}

TEST_CASE("planners are scale-covariant in the accuracy") {
  const double t = 0.3;
  SUBCASE("KL and TV horizons per step scale as 1/t when logs are frozen") {
    const auto k = unit_constants(true, true);
    const auto a = ulmc::plan_kl_strongly_logconcave<double>(1.0, 2.0, 3, 0.5, k);
    const auto b = ulmc::plan_kl_strongly_logconcave<double>(1.0, 2.0, 3, 0.5 * t, k);
    CHECK(b.N_exact == doctest::Approx(a.N_exact / t).epsilon(1e-12));
    const auto c = ulmc::plan_tv_lsi<double>(1.5, 2.0, 3, 0.5, k);
    const auto d = ulmc::plan_tv_lsi<double>(1.5, 2.0, 3, 0.5 * t, k);
    CHECK(d.N_exact == doctest::Approx(c.N_exact / t).epsilon(1e-12));
  }
  SUBCASE("Renyi iteration display scales as t^(-1/s)") {
    for (double s : {1.0, 0.5}) {
      const auto a = ulmc::plan_renyi_poincare<double>(2.0, 1.0, s, 3, 0.5, 0.4, 0.1);
      const auto b =
          ulmc::plan_renyi_poincare<double>(2.0, 1.0, s, 3, 0.5 * t, 0.4, 0.1);
      CHECK(b.N_exact ==
            doctest::Approx(a.N_exact * std::pow(t, -1.0 / s)).epsilon(1e-12));
    }
  }
}

TEST_CASE("a planned chain reproduces the exact Gaussian law") {
  // End-to-end: plan for a 2-d unit Gaussian at eps = 0.3, run the planned
  // chain from the planned initialization, and compare the final ensemble
  // against the kernel-propagated law and the planned accuracy.
  const Eigen::Index d = 2;
  const auto target = ulmc::make_builtin<double>("gaussian", d);
  const auto plan = ulmc::plan_kl_strongly_logconcave<double>(1.0, 1.0, d, 0.3);
  const auto init =
      ulmc::initialization<double>(1.0, plan.init_beta, d);
  CHECK(init.cov(0, 0) == doctest::Approx(plan.init_varsigma).epsilon(1e-15));

  const auto kernel = ulmc::kernel_from_quadratic<double>(*target, plan.gamma, plan.h);
  const auto exact = ulmc::propagate_law<double>(init, kernel, plan.N);
  CHECK(exact.cov(0, 0) == doctest::Approx(0.943).epsilon(0.01));

  // The planned run should already be inside the requested KL ball.
  const auto pi_law = ulmc::continuous_stationary_law<double>(*target);
  CHECK(ulmc::gaussian_kl<double>(exact, pi_law) <= 0.3);

  ulmc::RunOptions opts;
  opts.n_threads = 4;
  const Eigen::Index chains = 20000;
  const auto snaps = ulmc::run_chain<double>(init, chains, *target, plan, 20260816,
                                             opts);
  const auto& fin = snaps.back();
  CHECK(fin.step_index == plan.N);

  V mean = V::Zero(2 * d);
  mean.head(d) = fin.x.rowwise().mean();
  mean.tail(d) = fin.v.rowwise().mean();
  CHECK(mean.norm() <= 0.05);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double var =
        (fin.x.row(i).array() - mean[i]).square().sum() / double(chains - 1);
    const double se = exact.cov(i, i) * std::sqrt(2.0 / double(chains));
    CHECK(std::abs(var - exact.cov(i, i)) <= 4 * se);
  }
}
