#ifndef PDGLOSS_CLOSED_FORM_HPP
#define PDGLOSS_CLOSED_FORM_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "core.hpp"

namespace pdgloss {

namespace detail {

template <typename Real>
void check_pair(const std::vector<Real>& p, const std::vector<Real>& q) {
  if (p.size() != q.size() || p.empty())
    throw Error(ErrorCode::ShapeMismatch, "distributions must have the same nonzero length");
  for (const auto* v : {&p, &q}) {
    Real sum = 0;
    for (Real x : *v) {
      if (!(x >= 0) || !std::isfinite(x)) throw Error(ErrorCode::NotASimplex, "entries must be finite and >= 0");
      sum += x;
    }
    if (std::abs(sum - 1) > Real(1e-9)) throw Error(ErrorCode::NotASimplex, "entries must sum to 1");
  }
}

template <typename Real>
Real scaled_log(Real c, Real x) {
  if (c == 0) return 0;
  if (x <= 0) return -std::numeric_limits<Real>::infinity();
  return c * std::log(x);
}

} // namespace detail

template <typename Real>
Real kl_divergence(const std::vector<Real>& p, const std::vector<Real>& q) {
  detail::check_pair(p, q);
  Real d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (q[i] <= 0) return std::numeric_limits<Real>::infinity();
    d += p[i] * std::log(p[i] / q[i]);
  }
  return d;
}

/// Inconsistency of believing p with confidence r and q with confidence s:
///   -(r+s) log sum_x (p(x)^r q(x)^s)^(1/(r+s)).
template <typename Real>
Real pdg_divergence(const std::vector<Real>& p, const std::vector<Real>& q, Real r, Real s) {
  detail::check_pair(p, q);
  if (!(r >= 0 && s >= 0 && r + s > 0)) throw Error(ErrorCode::InvalidArgument, "need r, s >= 0 and r + s > 0");
  const Real t = r + s;
  std::vector<Real> terms(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    terms[i] = (detail::scaled_log(r, p[i]) + detail::scaled_log(s, q[i])) / t;
  Real l = log_sum_exp<Real>(terms);
  if (std::isinf(l)) return std::numeric_limits<Real>::infinity();
  return std::max<Real>(0, -t * l);
}

/// Renyi divergence of order alpha, (1/(alpha-1)) log sum p^alpha q^(1-alpha);
/// alpha = 1 is the KL divergence.
template <typename Real>
Real renyi_divergence(const std::vector<Real>& p, const std::vector<Real>& q, Real alpha) {
  detail::check_pair(p, q);
  if (!(alpha > 0)) throw Error(ErrorCode::InvalidArgument, "Renyi order must be positive");
  if (alpha == 1) return kl_divergence(p, q);
  std::vector<Real> terms;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (q[i] <= 0) {
      if (alpha > 1) return std::numeric_limits<Real>::infinity();
      continue;
    }
    terms.push_back(alpha * std::log(p[i]) + (1 - alpha) * std::log(q[i]));
  }
  if (terms.empty()) return std::numeric_limits<Real>::infinity();
  return log_sum_exp<Real>(terms) / (alpha - 1);
}

struct RenyiForm {
  double alpha;
  double scale;
};

struct ConfidencePair {
  double r;
  double s;
};

/// pdg_divergence(p, q, r, s) = scale * D_alpha(p || q).
inline RenyiForm confidences_to_alpha(double r, double s) {
  if (!(r >= 0 && s >= 0 && r + s > 0)) throw Error(ErrorCode::InvalidArgument, "need r, s >= 0 and r + s > 0");
  return {r / (r + s), s};
}

/// Inverse of confidences_to_alpha with s = 1. Orders above 1 map to a
/// negative r, the negated-divergence branch.
inline ConfidencePair alpha_to_confidences(double alpha) {
  if (alpha == 1.0) throw Error(ErrorCode::InvalidArgument, "alpha = 1 (KL) has no finite pair of confidences");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  return {alpha / (1.0 - alpha), 1.0};
}

/// Weighted power mean; p = 0 is the geometric mean.
template <typename Real>
Real power_mean(const std::vector<Real>& values, const std::vector<Real>& weights, Real p) {
  if (values.size() != weights.size() || values.empty())
    throw Error(ErrorCode::ShapeMismatch, "values and weights differ in length");
  if (p == 0) {
    Real l = 0;
    for (std::size_t i = 0; i < values.size(); ++i) l += weights[i] * std::log(values[i]);
    return std::exp(l);
  }
  Real acc = 0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += weights[i] * std::pow(values[i], p);
  return std::pow(acc, 1 / p);
}

struct GaussianBelief {
  double mean;
  double sigma;
  double beta = 1.0;
};

/// Inconsistency between two conditional Gaussians on Y, averaged over x ~ D.
inline double two_gaussian_inconsistency(const std::vector<GaussianBelief>& first, const std::vector<GaussianBelief>& second,
                                         const std::vector<double>& d) {
  if (first.size() != second.size() || first.size() != d.size())
    throw Error(ErrorCode::ShapeMismatch, "Gaussian tables and D must cover the same inputs");
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] <= 0.0) continue;
    const auto& a = first[i];
    const auto& b = second[i];
    if (!(a.sigma > 0 && b.sigma > 0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
    if (!(a.beta > 0 && b.beta > 0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
    double bt = a.beta + b.beta;
    // Weights on (sigma1, sigma2) are the normalized confidences, reversed.
    std::vector<double> w{b.beta / bt, a.beta / bt};
    std::vector<double> sig{a.sigma, b.sigma};
    double qm = power_mean(sig, w, 2.0);
    double gm = power_mean(sig, w, 0.0);
    double z = (a.mean - b.mean) / qm;
    total += d[i] * (bt * std::log(qm / gm) + 0.5 * (a.beta * b.beta / bt) * z * z);
  }
  return total;
}

/// Unit-variance, unit-confidence Gaussians N(f(x), 1), N(h(x), 1) have
/// inconsistency kMseCoefficient * E_D (f - h)^2. The coefficient is 1/4,
/// i.e. twice the Bhattacharyya distance; 1/2 is the value sometimes quoted
/// and is kept only so tests can show it disagrees with the oracle.
inline constexpr double kMseCoefficient = 0.25;
inline constexpr double kMseCoefficientQuoted = 0.5;

struct SquareCompletion {
  double g;
  double sigma_tilde;
  double residual;
};

/// (b1/s1^2)(y-f)^2 + (b2/s2^2)(y-h)^2 = ((y-g)/sigma_tilde)^2 + residual (f-h)^2.
inline SquareCompletion complete_square(double beta1, double sigma1, double f, double beta2, double sigma2, double h) {
  if (!(sigma1 > 0 && sigma2 > 0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  double den = beta1 * sigma2 * sigma2 + beta2 * sigma1 * sigma1;
  if (!(den > 0)) throw Error(ErrorCode::InvalidArgument, "confidences must not both vanish");
  return {(beta1 * sigma2 * sigma2 * f + beta2 * sigma1 * sigma1 * h) / den, sigma1 * sigma2 / std::sqrt(den),
          beta1 * beta2 / den};
}

} // namespace pdgloss

#endif // PDGLOSS_CLOSED_FORM_HPP
