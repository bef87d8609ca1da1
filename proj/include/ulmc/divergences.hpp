#pragma once

// Sample-based distance diagnostics for targets without an exact oracle:
// one-dimensional quantile-coupling Wasserstein-2, moment-error reports
// against reference moments, and the Pinsker total-variation bound. No
// nonparametric KL/Renyi estimators live here on purpose: their bias at
// usable sample sizes would swamp every signal these diagnostics feed.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <ulmc/errors.hpp>
#include <ulmc/types.hpp>

namespace ulmc {

namespace detail {

template <class S>
void validate_sample_set(const SampleSet<S>& s, const char* what) {
  if (s.size() < 2) throw DomainError(std::string(what) + ": need at least 2 samples");
  if (!s.points.allFinite())
    throw DomainError(std::string(what) + ": sample set has non-finite entries");
  if (s.weights) {
    if (s.weights->size() != s.size())
      throw DimensionError(std::string(what) + ": weight count mismatch");
    if (!(s.weights->minCoeff() >= S(0)) || !(s.weights->sum() > S(0)))
      throw DomainError(std::string(what) + ": weights must be nonnegative with positive sum");
  }
}

// Type-7 (linear) interpolated quantile of a sorted vector at probability p.
template <class S>
S sorted_quantile(const std::vector<S>& sorted, S p) {
  const auto n = sorted.size();
  const S pos = p * S(n - 1);
  const auto lo = std::size_t(pos);
  if (lo + 1 >= n) return sorted.back();
  const S frac = pos - S(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Quantile-coupling Wasserstein-2 distance between one-dimensional sample
/// sets. Equal sizes: matched order statistics. Unequal sizes: both quantile
/// functions interpolated at the midpoints (k + 1/2)/K, K = max(n_a, n_b).
/// Weighted samples are not supported here.
template <class S>
S w2_1d(const SampleSet<S>& a, const SampleSet<S>& b) {
  detail::validate_sample_set(a, "w2_1d");
  detail::validate_sample_set(b, "w2_1d");
  if (a.dim() != 1 || b.dim() != 1)
    throw DimensionError("w2_1d: defined for one-dimensional samples only");
  if (a.weights || b.weights)
    throw DomainError("w2_1d: weighted samples are not supported");

  std::vector<S> xa(a.points.data(), a.points.data() + a.size());
  std::vector<S> xb(b.points.data(), b.points.data() + b.size());
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());

  S acc = S(0);
  if (xa.size() == xb.size()) {
    for (std::size_t i = 0; i < xa.size(); ++i) {
      const S diff = xa[i] - xb[i];
      acc += diff * diff;
    }
    return std::sqrt(acc / S(xa.size()));
  }
  const std::size_t K = std::max(xa.size(), xb.size());
  for (std::size_t k = 0; k < K; ++k) {
    const S p = (S(k) + S(0.5)) / S(K);
    const S diff = detail::sorted_quantile(xa, p) - detail::sorted_quantile(xb, p);
    acc += diff * diff;
  }
  return std::sqrt(acc / S(K));
}

/// Reference moments for moment_error. `mean` is required; `cov` and the
/// first absolute moment E||x|| are optional.
template <class S>
struct MomentSummary {
  Vec<S> mean;
  std::optional<Mat<S>> cov;
  std::optional<S> mean_norm;
};

/// Sample-vs-reference moment comparison. Absolute errors come with matching
/// standard errors so callers can form z-scores; relative errors are scaled
/// by max(1, reference magnitude). The E||x|| estimate always carries a 95%
/// normal-approximation interval. Weighted samples use the effective sample
/// size (sum w)^2 / sum w^2 for all standard errors.
template <class S>
struct MomentErrorReport {
  Vec<S> mean_error;  // sample mean - reference mean
  Vec<S> mean_se;
  S mean_rel_error = S(0);
  std::optional<Mat<S>> cov_error;  // sample covariance - reference covariance
  std::optional<Mat<S>> cov_se;
  std::optional<S> cov_rel_error;
  S mean_norm_estimate = S(0);  // sample E||x||
  S mean_norm_se = S(0);
  S mean_norm_lo = S(0), mean_norm_hi = S(0);
  std::optional<S> mean_norm_rel_error;
  S effective_samples = S(0);
};

template <class S>
MomentErrorReport<S> moment_error(const SampleSet<S>& a, const MomentSummary<S>& ref) {
  detail::validate_sample_set(a, "moment_error");
  const Eigen::Index n = a.size(), d = a.dim();
  if (ref.mean.size() != d) throw DimensionError("moment_error: reference mean dimension");
  if (ref.cov && (ref.cov->rows() != d || ref.cov->cols() != d))
    throw DimensionError("moment_error: reference covariance shape");

  Vec<S> w;
  if (a.weights) {
    w = *a.weights / a.weights->sum();
  } else {
    w = Vec<S>::Constant(n, S(1) / S(n));
  }
  const S n_eff = S(1) / w.squaredNorm();

  MomentErrorReport<S> rep;
  rep.effective_samples = n_eff;

  const Vec<S> mean = a.points.transpose() * w;
  Mat<S> centered = a.points;
  centered.rowwise() -= mean.transpose();
  // Weighted covariance with the standard frequency-weight bias correction.
  const Mat<S> cov = (centered.transpose() * w.asDiagonal() * centered) /
                     (S(1) - w.squaredNorm());

  rep.mean_error = mean - ref.mean;
  rep.mean_se = (cov.diagonal() / n_eff).cwiseSqrt();
  rep.mean_rel_error =
      rep.mean_error.norm() / std::max(S(1), S(ref.mean.norm()));

  if (ref.cov) {
    rep.cov_error = Mat<S>(cov - *ref.cov);
    Mat<S> se(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        se(i, j) = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n_eff);
    rep.cov_se = se;
    const S scale = std::max(S(1), S(ref.cov->cwiseAbs().maxCoeff()));
    rep.cov_rel_error = rep.cov_error->cwiseAbs().maxCoeff() / scale;
  }

  const Vec<S> norms = a.points.rowwise().norm();
  rep.mean_norm_estimate = norms.dot(w);
  const S var_norm =
      (norms.array() - rep.mean_norm_estimate).square().matrix().dot(w) /
      (S(1) - w.squaredNorm());
  rep.mean_norm_se = std::sqrt(std::max(S(0), var_norm) / n_eff);
  rep.mean_norm_lo = rep.mean_norm_estimate - S(1.96) * rep.mean_norm_se;
  rep.mean_norm_hi = rep.mean_norm_estimate + S(1.96) * rep.mean_norm_se;
  if (ref.mean_norm) {
    rep.mean_norm_rel_error = std::abs(rep.mean_norm_estimate - *ref.mean_norm) /
                              std::max(S(1), std::abs(*ref.mean_norm));
  }
  return rep;
}

/// Convenience overload comparing against a Gaussian law of matching width.
template <class S>
MomentErrorReport<S> moment_error(const SampleSet<S>& a, const GaussianLaw<S>& ref) {
  if (ref.mean.size() != a.dim())
    throw DimensionError("moment_error: reference law dimension");
  MomentSummary<S> summary;
  summary.mean = ref.mean;
  summary.cov = ref.cov;
  return moment_error<S>(a, summary);
}

/// Pinsker bound TV <= sqrt(KL/2), capped at 1.
template <class S>
S pinsker_tv_bound(S kl) {
  if (!(kl >= S(0))) throw DomainError("pinsker_tv_bound: KL must be nonnegative");
  return std::min(S(1), std::sqrt(kl / 2));
}

}  // namespace ulmc
