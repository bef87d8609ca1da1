#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ulmc/linalg.hpp"

namespace ulmc {

/// One point of the position-momentum state space.
template <class S>
struct PhasePoint {
  Vec<S> x;
  Vec<S> v;

  Eigen::Index dim() const { return x.size(); }
  bool finite() const { return x.allFinite() && v.allFinite(); }
};

/// Gaussian law on phase space R^{2d}, stored as stacked [x; v] blocks.
template <class S>
struct GaussianLaw {
  Vec<S> mean;  // 2d
  Mat<S> cov;   // 2d x 2d

  Eigen::Index phase_dim() const { return mean.size(); }
  Eigen::Index dim() const { return mean.size() / 2; }
};

/// Throws unless `law` is well-formed: even dimension, symmetric covariance
/// (1e-12 relative) and eigenvalues >= -1e-12.
template <class S>
inline void validate_law(const GaussianLaw<S>& law) {
  if (law.mean.size() == 0 || law.mean.size() % 2 != 0) {
    throw DimensionError("GaussianLaw: mean must live on R^{2d}");
  }
  if (law.cov.rows() != law.mean.size() || law.cov.cols() != law.mean.size()) {
    throw DimensionError("GaussianLaw: covariance shape mismatch");
  }
  const S scale = std::max(S(1), law.cov.cwiseAbs().maxCoeff());
  if ((law.cov - law.cov.transpose()).cwiseAbs().maxCoeff() > S(1e-12) * scale) {
    throw NumericsError("GaussianLaw: covariance is not symmetric");
  }
  if (min_eigenvalue_sym<S>(law.cov) < S(-1e-12) * scale) {
    throw NumericsError("GaussianLaw: covariance has a negative eigenvalue");
  }
}

/// A block of chains advanced in lockstep. Columns are chains. The RNG state
/// is implicit: chain i at step k draws from the counter stream
/// (seed, chain=i, step=k), so (seed, step_index) fully describes it.
template <class S>
struct Ensemble {
  Mat<S> x;  // d x chains
  Mat<S> v;  // d x chains
  std::int64_t step_index = 0;
  std::uint64_t seed = 0;

  Eigen::Index dim() const { return x.rows(); }
  Eigen::Index chains() const { return x.cols(); }
  PhasePoint<S> point(Eigen::Index i) const { return {x.col(i), v.col(i)}; }
};

enum class Metric { KL, TV, Renyi };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::KL: return "kl";
    case Metric::TV: return "tv";
    default: return "renyi";
  }
}

/// Multipliers standing in for the hidden Theta-tilde constants of the
/// complexity statements. Defaults of 1.0 reproduce the printed formulas.
/// The two freeze flags replace the h-side polylog divisor and the T-side
/// log factor by 1 (they are independent knobs because the worked examples
/// freeze one side but not the other). c_guard scales the step-size guard
/// h <= c_guard * min(L^{-1/2}, gamma^{-1}, d^{-1/2}).
template <class S>
struct PlannerConstants {
  S c_h = S(1);
  S c_T = S(1);
  S c_gamma = S(1);
  S C0 = S(1);
  S c_guard = S(2);
  bool freeze_h_logs = false;
  bool freeze_T_logs = false;
};

/// Resolved run schedule. T stores the planner's horizon formula value and
/// N = ceil(T/h); the Renyi planner instead derives N from its own display
/// and sets T = N*h, which satisfies the same invariant.
template <class S>
struct SchedulePlan {
  S gamma = S(0);
  S h = S(0);
  std::int64_t N = 0;
  S T = S(0);
  Metric metric = Metric::KL;
  S q = S(0);  // Renyi order when metric == Renyi
  S eps = S(0);
  S init_varsigma = S(0);  // position block of the product initialization
  S init_beta = S(0);      // hinge weight recorded for the initialization
  PlannerConstants<S> constants;
  S N_exact = S(0);        // pre-ceil value of the N display (scaling tests)
  S log_h_factor = S(1);   // computed polylog divisor applied to h
  S log_T_factor = S(1);   // computed log factor applied to T
  std::vector<std::string> warnings;
};

/// Empirical sample matrix with provenance, rows are draws.
template <class S>
struct SampleSet {
  Mat<S> points;  // n x d
  std::optional<Vec<S>> weights;
  struct Provenance {
    std::string target;
    std::string plan;
    std::uint64_t seed = 0;
  } provenance;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

}  // namespace ulmc
