#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ulmc/errors.hpp"
#include "ulmc/linalg.hpp"

namespace ulmc {

/// Quantitative regularity of a potential: gradient Hölder pair (L, s),
/// strong convexity m (0 if none), functional-inequality constants when
/// known, and the Hessian-lower-bound radius parameter R (0 when convex).
template <class S>
struct RegularityInfo {
  S L = S(1);
  S s = S(1);
  S m = S(0);
  std::optional<S> C_PI;
  std::optional<S> C_LSI;
  S R = S(0);
};

/// A potential U on R^d with gradient, optional Hessian, and constants.
/// Gradients are normalized so that grad(0) = 0; enforced at construction.
template <class S>
class Target {
 public:
  virtual ~Target() = default;

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return dim_; }
  const RegularityInfo<S>& constants() const { return info_; }

  virtual S value(const Vec<S>& x) const = 0;
  virtual Vec<S> gradient(const Vec<S>& x) const = 0;
  virtual bool has_hessian() const { return false; }
  virtual Mat<S> hessian(const Vec<S>&) const {
    throw MissingHessianError(name_ + ": Hessian not available");
  }

 protected:
  Target(std::string name, Eigen::Index dim, RegularityInfo<S> info)
      : name_(std::move(name)), dim_(dim), info_(std::move(info)) {
    if (dim_ <= 0) throw DomainError(name_ + ": dimension must be positive");
  }

  /// Called by concrete constructors once their state is ready.
  void check_origin() const {
    const S g0 = gradient(Vec<S>::Zero(dim_)).norm();
    if (!(g0 <= S(1e-12))) {
      throw NumericsError(name_ + ": gradient at the origin is " +
                          std::to_string(double(g0)) + ", expected 0");
    }
  }

  std::string name_;
  Eigen::Index dim_;
  RegularityInfo<S> info_;
};

template <class S>
using TargetPtr = std::shared_ptr<const Target<S>>;

namespace detail {

/// log cosh t without overflow: |t| + log1p(exp(-2|t|)) - log 2.
template <class S>
inline S log_cosh(S t) {
  const S a = std::abs(t);
  return a + std::log1p(std::exp(S(-2) * a)) - S(M_LN2);
}

}  // namespace detail

/// U(x) = (1/2) sum_i lambda_i x_i^2. A single spectrum value makes it
/// isotropic; a full diagonal models anisotropic quadratics (kappa sweeps).
template <class S>
class GaussianTarget final : public Target<S> {
 public:
  GaussianTarget(Eigen::Index dim, Vec<S> spectrum)
      : Target<S>("gaussian", dim, make_info(spectrum)), lambda_(std::move(spectrum)) {
    this->check_origin();
  }

  S value(const Vec<S>& x) const override {
    return S(0.5) * (lambda_.array() * x.array().square()).sum();
  }
  Vec<S> gradient(const Vec<S>& x) const override {
    return (lambda_.array() * x.array()).matrix();
  }
  bool has_hessian() const override { return true; }
  Mat<S> hessian(const Vec<S>&) const override {
    return Mat<S>(lambda_.asDiagonal());
  }
  const Vec<S>& spectrum() const { return lambda_; }

 private:
  static RegularityInfo<S> make_info(const Vec<S>& lam) {
    if (lam.size() == 0 || lam.minCoeff() <= S(0)) {
      throw DomainError("gaussian: spectrum must be positive");
    }
    RegularityInfo<S> info;
    info.m = lam.minCoeff();
    info.L = lam.maxCoeff();
    info.s = S(1);
    info.C_LSI = S(1) / info.m;
    info.C_PI = S(1) / info.m;
    info.R = S(0);
    return info;
  }
  Vec<S> lambda_;
};

/// Symmetric two-component Gaussian mixture potential
///   U(x) = ||x||^2/2 + ||a||^2/2 - log cosh <a, x>,
/// strongly convex with m = 1 - ||a||^2 while ||a|| < 1.
template <class S>
class MixtureTarget final : public Target<S> {
 public:
  MixtureTarget(Eigen::Index dim, Vec<S> a)
      : Target<S>("gaussian_mixture", dim, make_info(a)), a_(std::move(a)) {
    this->check_origin();
  }

  S value(const Vec<S>& x) const override {
    return S(0.5) * x.squaredNorm() + S(0.5) * a_.squaredNorm() -
           detail::log_cosh<S>(a_.dot(x));
  }
  Vec<S> gradient(const Vec<S>& x) const override {
    return x - a_ * std::tanh(a_.dot(x));
  }
  bool has_hessian() const override { return true; }
  Mat<S> hessian(const Vec<S>& x) const override {
    const S t = std::tanh(a_.dot(x));
    const S sech2 = S(1) - t * t;
    Mat<S> h = Mat<S>::Identity(this->dim_, this->dim_);
    h.noalias() -= sech2 * (a_ * a_.transpose());
    return h;
  }
  const Vec<S>& direction() const { return a_; }

 private:
  static RegularityInfo<S> make_info(const Vec<S>& a) {
    RegularityInfo<S> info;
    info.L = S(1);
    info.s = S(1);
    const S na2 = a.squaredNorm();
    info.m = std::max(S(0), S(1) - na2);
    info.R = std::max(S(0), na2 - S(1));
    if (info.m > S(0)) {
      info.C_LSI = S(1) / info.m;
      info.C_PI = S(1) / info.m;
    }
    return info;
  }
  Vec<S> a_;
};

/// U(x) = sqrt(1 + ||x||^2): convex, (1,1)-smooth, Poincaré constant Θ(d)
/// (unit constant adopted).
template <class S>
class HyperbolicTarget final : public Target<S> {
 public:
  explicit HyperbolicTarget(Eigen::Index dim)
      : Target<S>("hyperbolic", dim, make_info(dim)) {
    this->check_origin();
  }

  S value(const Vec<S>& x) const override {
    return std::sqrt(S(1) + x.squaredNorm());
  }
  Vec<S> gradient(const Vec<S>& x) const override {
    return x / std::sqrt(S(1) + x.squaredNorm());
  }
  bool has_hessian() const override { return true; }
  Mat<S> hessian(const Vec<S>& x) const override {
    const S w = std::sqrt(S(1) + x.squaredNorm());
    Mat<S> h = Mat<S>::Identity(this->dim_, this->dim_) / w;
    h.noalias() -= (x * x.transpose()) / (w * w * w);
    return h;
  }

 private:
  static RegularityInfo<S> make_info(Eigen::Index dim) {
    RegularityInfo<S> info;
    info.L = S(1);
    info.s = S(1);
    info.m = S(0);
    info.C_PI = S(dim);
    info.R = S(0);
    return info;
  }
};

/// U(x) = ||x||^alpha with alpha in (1, 2]: weakly smooth with Hölder
/// exponent s = alpha - 1 and sharp coefficient L = alpha * 2^{2-alpha}
/// (attained on antipodal pairs); Poincaré constant Θ(d^{2/alpha - 1}).
/// No global Hessian for alpha < 2.
template <class S>
class PowerTarget final : public Target<S> {
 public:
  PowerTarget(Eigen::Index dim, S alpha)
      : Target<S>("power", dim, make_info(dim, alpha)), alpha_(alpha) {
    this->check_origin();
  }

  S value(const Vec<S>& x) const override {
    return std::pow(x.norm(), alpha_);
  }
  Vec<S> gradient(const Vec<S>& x) const override {
    const S r = x.norm();
    if (r == S(0)) return Vec<S>::Zero(this->dim_);
    return alpha_ * std::pow(r, alpha_ - S(2)) * x;
  }
  bool has_hessian() const override { return alpha_ == S(2); }
  Mat<S> hessian(const Vec<S>& x) const override {
    if (alpha_ != S(2)) {
      throw MissingHessianError(
          "power: Hessian undefined at the origin for alpha < 2");
    }
    (void)x;
    return S(2) * Mat<S>::Identity(this->dim_, this->dim_);
  }
  S alpha() const { return alpha_; }

 private:
  static RegularityInfo<S> make_info(Eigen::Index dim, S alpha) {
    if (!(alpha > S(1) && alpha <= S(2))) {
      throw DomainError("power: alpha must lie in (1, 2]");
    }
    RegularityInfo<S> info;
    info.s = alpha - S(1);
    info.L = alpha * std::pow(S(2), S(2) - alpha);
    info.m = S(0);
    info.C_PI = std::pow(S(dim), S(2) / alpha - S(1));
    info.R = S(0);
    return info;
  }
  S alpha_;
};

/// Hinge parameters for the modified potential
///   U^(a)(x) = U(x) + (beta/2) (||x|| - S)_+^2.
template <class S>
struct ModifiedTargetParams {
  S beta = S(0);
  S S_radius = S(0);
};

/// Wrapper adding the quadratic hinge; identical to the base inside radius S.
template <class S>
class ModifiedTarget final : public Target<S> {
 public:
  ModifiedTarget(TargetPtr<S> base, ModifiedTargetParams<S> p)
      : Target<S>(base->name() + "+hinge", base->dim(), make_info(*base, p)),
        base_(std::move(base)),
        p_(p) {
    this->check_origin();
  }

  S value(const Vec<S>& x) const override {
    const S excess = std::max(S(0), x.norm() - p_.S_radius);
    return base_->value(x) + S(0.5) * p_.beta * excess * excess;
  }
  Vec<S> gradient(const Vec<S>& x) const override {
    Vec<S> g = base_->gradient(x);
    const S r = x.norm();
    if (r > p_.S_radius && r > S(0)) {
      g.noalias() += (p_.beta * (r - p_.S_radius) / r) * x;
    }
    return g;
  }
  bool has_hessian() const override { return base_->has_hessian(); }
  Mat<S> hessian(const Vec<S>& x) const override {
    Mat<S> h = base_->hessian(x);
    const S r = x.norm();
    if (r > p_.S_radius && r > S(0)) {
      // Hinge curvature (one-sided at the kink r == S, measure zero).
      h += p_.beta * ((S(1) - p_.S_radius / r) *
                          Mat<S>::Identity(this->dim_, this->dim_) +
                      (p_.S_radius / (r * r * r)) * (x * x.transpose()));
    }
    return h;
  }
  const ModifiedTargetParams<S>& params() const { return p_; }
  const Target<S>& base() const { return *base_; }

 private:
  static RegularityInfo<S> make_info(const Target<S>& base,
                                     const ModifiedTargetParams<S>& p) {
    if (p.beta < S(0) || p.S_radius < S(0)) {
      throw DomainError("modify: beta and S must be nonnegative");
    }
    RegularityInfo<S> info = base.constants();
    info.L = info.L + p.beta;  // hinge gradient is beta-Lipschitz
    info.C_PI.reset();
    info.C_LSI.reset();
    return info;
  }
  TargetPtr<S> base_;
  ModifiedTargetParams<S> p_;
};

/// Builds one of the builtin families:
///   gaussian(m | spectrum), gaussian_mixture(a), hyperbolic, power(alpha).
/// Scalar lists are interpreted per family; defaults: gaussian m=1,
/// mixture a = e_1/3.
template <class S>
inline TargetPtr<S> make_builtin(const std::string& name, Eigen::Index dim,
                                 const std::vector<S>& params = {}) {
  if (dim <= 0) throw DomainError("make_builtin: dimension must be positive");
  if (name == "gaussian") {
    Vec<S> lam;
    if (params.empty()) {
      lam = Vec<S>::Constant(dim, S(1));
    } else if (params.size() == 1) {
      lam = Vec<S>::Constant(dim, params[0]);
    } else if (Eigen::Index(params.size()) == dim) {
      lam = Eigen::Map<const Vec<S>>(params.data(), dim);
    } else {
      throw ConfigError("gaussian: params must be empty, one scalar, or d scalars");
    }
    return std::make_shared<GaussianTarget<S>>(dim, std::move(lam));
  }
  if (name == "gaussian_mixture") {
    Vec<S> a = Vec<S>::Zero(dim);
    if (params.empty()) {
      a[0] = S(1) / S(3);
    } else if (params.size() == 1) {
      a[0] = params[0];
    } else if (Eigen::Index(params.size()) == dim) {
      a = Eigen::Map<const Vec<S>>(params.data(), dim);
    } else {
      throw ConfigError(
          "gaussian_mixture: params must be empty, one scalar, or d scalars");
    }
    return std::make_shared<MixtureTarget<S>>(dim, std::move(a));
  }
  if (name == "hyperbolic") {
    if (!params.empty()) throw ConfigError("hyperbolic: takes no params");
    return std::make_shared<HyperbolicTarget<S>>(dim);
  }
  if (name == "power") {
    if (params.size() != 1) throw ConfigError("power: needs exactly one param alpha");
    return std::make_shared<PowerTarget<S>>(dim, params[0]);
  }
  throw ConfigError("unknown family: " + name);
}

template <class S>
inline TargetPtr<S> modify(TargetPtr<S> target, ModifiedTargetParams<S> p) {
  return std::make_shared<ModifiedTarget<S>>(std::move(target), p);
}

/// Pairwise empirical check of the declared (L, s) Hölder bound and the
/// printed convexity normalization <dg, dx> / ||dx||^2 >= m/2.
template <class S>
struct ViolationReport {
  S max_holder_ratio = S(0);     // max ||dg|| / ||dx||^s
  S min_convexity_ratio = S(0);  // min <dg, dx> / ||dx||^2
  bool holder_ok = false;
  bool convexity_ok = false;
  Eigen::Index pairs = 0;
};

template <class S>
inline ViolationReport<S> check_regularity(const Target<S>& target,
                                           const std::vector<Vec<S>>& samples,
                                           S tol = S(0.05)) {
  if (samples.size() < 2) {
    throw DomainError("check_regularity: need at least two sample points");
  }
  const auto& info = target.constants();
  ViolationReport<S> rep;
  rep.min_convexity_ratio = std::numeric_limits<S>::infinity();
  std::vector<Vec<S>> grads;
  grads.reserve(samples.size());
  for (const auto& p : samples) grads.push_back(target.gradient(p));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const Vec<S> dx = samples[i] - samples[j];
      const S ndx = dx.norm();
      if (ndx < S(1e-12)) continue;
      const Vec<S> dg = grads[i] - grads[j];
      rep.max_holder_ratio =
          std::max(rep.max_holder_ratio, dg.norm() / std::pow(ndx, info.s));
      rep.min_convexity_ratio =
          std::min(rep.min_convexity_ratio, dg.dot(dx) / (ndx * ndx));
      ++rep.pairs;
    }
  }
  rep.holder_ok = rep.max_holder_ratio <= info.L * (S(1) + tol);
  rep.convexity_ok =
      info.m <= S(0) || rep.min_convexity_ratio >= (info.m / S(2)) * (S(1) - tol);
  return rep;
}

namespace detail {

/// Simpson integration of f over [0, b] with n (even) panels.
template <class S, class F>
inline S simpson(F&& f, S b, int n) {
  const S dx = b / S(n);
  S acc = f(S(0)) + f(b);
  for (int i = 1; i < n; ++i) {
    acc += f(dx * S(i)) * ((i % 2 == 1) ? S(4) : S(2));
  }
  return acc * dx / S(3);
}

}  // namespace detail

/// E ||x|| under the target's Gibbs measure. Exact (quadrature) for the
/// isotropic families; a sqrt-second-moment upper bound for the rest
/// (sufficient for the one-sided tail envelopes it feeds).
template <class S>
inline S mean_norm_estimate(const Target<S>& target) {
  const Eigen::Index d = target.dim();
  if (const auto* g = dynamic_cast<const GaussianTarget<S>*>(&target)) {
    const Vec<S>& lam = g->spectrum();
    if ((lam.array() == lam[0]).all()) {
      const S m = lam[0];
      return std::sqrt(S(2) / m) *
             std::exp(std::lgamma((S(d) + S(1)) / S(2)) - std::lgamma(S(d) / S(2)));
    }
    return std::sqrt(lam.cwiseInverse().sum());  // sqrt E||x||^2
  }
  if (const auto* mx = dynamic_cast<const MixtureTarget<S>*>(&target)) {
    return std::sqrt(S(d) + mx->direction().squaredNorm());  // sqrt E||x||^2
  }
  if (const auto* mod = dynamic_cast<const ModifiedTarget<S>*>(&target)) {
    // The hinge only thins the tails; the base value upper-bounds E||x||.
    return mean_norm_estimate(mod->base());
  }
  // Radial families: E||x|| = int r^d e^-U / int r^{d-1} e^-U.
  auto profile = [&](S r) {
    Vec<S> x = Vec<S>::Zero(d);
    x[0] = r;
    return target.value(x);
  };
  const S rmax = S(120) + S(20) * S(d);
  const int panels = 120000;
  const S u0 = profile(S(0));  // stabilize the exponentials
  const S num = detail::simpson<S>(
      [&](S r) { return std::pow(r, S(d)) * std::exp(-(profile(r) - u0)); }, rmax,
      panels);
  const S den = detail::simpson<S>(
      [&](S r) { return std::pow(r, S(d) - S(1)) * std::exp(-(profile(r) - u0)); },
      rmax, panels);
  return num / den;
}

}  // namespace ulmc
