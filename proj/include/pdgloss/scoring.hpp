#ifndef PDGLOSS_SCORING_HPP
#define PDGLOSS_SCORING_HPP

#include <cmath>
#include <vector>

#include "core.hpp"

namespace pdgloss {

inline constexpr double kHardMatchTolerance = 1e-9;

namespace detail {

// Joint-state to (row, column) lookup for one edge.
struct EdgeIndex {
  std::vector<std::size_t> row;
  std::vector<std::size_t> col;
};

inline EdgeIndex edge_index(const VariableList& space, const Cpd& cpd) {
  return {projection_index(space, cpd.sources()), projection_index(space, cpd.targets())};
}

struct EdgeMarginals {
  std::vector<double> st;   // mu(s, t), row-major
  std::vector<double> s;    // mu(s)
};

inline EdgeMarginals edge_marginals(const EdgeIndex& ix, const Cpd& cpd, std::span<const double> mu) {
  EdgeMarginals m{std::vector<double>(cpd.rows() * cpd.cols(), 0.0), std::vector<double>(cpd.rows(), 0.0)};
  for (std::size_t w = 0; w < mu.size(); ++w) {
    m.st[ix.row[w] * cpd.cols() + ix.col[w]] += mu[w];
    m.s[ix.row[w]] += mu[w];
  }
  return m;
}

inline void require_same_space(const Pdg& pdg, const JointTable& mu) {
  if (mu.variables() != pdg.variables())
    throw Error(ErrorCode::ShapeMismatch, "joint is over " + describe(mu.variables()) + ", PDG has " +
                                              describe(pdg.variables()));
}

// E_{s~mu} D(mu(T|s) || p(T|s)) for one edge; hard edges give 0 or inf.
inline double edge_divergence(const Edge& e, const EdgeMarginals& m) {
  const Cpd& p = e.cpd;
  if (e.is_hard()) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
      if (m.s[r] <= 0.0) continue;
      for (std::size_t c = 0; c < p.cols(); ++c)
        if (std::abs(m.st[r * p.cols() + c] / m.s[r] - p(r, c)) > kHardMatchTolerance) return kInf;
    }
    return 0.0;
  }
  double d = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    if (m.s[r] <= 0.0) continue;
    for (std::size_t c = 0; c < p.cols(); ++c) d += xlogxy(m.st[r * p.cols() + c], m.s[r] * p(r, c));
  }
  return std::max(d, 0.0);
}

inline double conditional_entropy(const Cpd& p, const EdgeMarginals& m) {
  double h = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r)
    for (std::size_t c = 0; c < p.cols(); ++c) h -= xlogxy(m.st[r * p.cols() + c], m.s[r]);
  return h;
}

} // namespace detail

inline Score incompatibility(const Pdg& pdg, const JointTable& mu) {
  detail::require_same_space(pdg, mu);
  double total = 0.0;
  for (const auto& e : pdg.edges()) {
    if (e.beta.value() == 0.0) continue;
    auto ix = detail::edge_index(pdg.variables(), e.cpd);
    auto m = detail::edge_marginals(ix, e.cpd, mu.probs());
    double d = detail::edge_divergence(e, m);
    if (std::isinf(d)) return Score::infinity();
    if (!e.is_hard()) total += e.beta.value() * d;
  }
  return {total};
}

inline Score ideficiency(const Pdg& pdg, const JointTable& mu) {
  detail::require_same_space(pdg, mu);
  double total = -entropy(mu.probs());
  for (const auto& e : pdg.edges()) {
    if (e.alpha == 0.0) continue;
    auto ix = detail::edge_index(pdg.variables(), e.cpd);
    total += e.alpha * detail::conditional_entropy(e.cpd, detail::edge_marginals(ix, e.cpd, mu.probs()));
  }
  return {total};
}

inline Score gamma_score(const Pdg& pdg, const JointTable& mu, double gamma) {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be nonnegative");
  Score inc = incompatibility(pdg, mu);
  if (gamma == 0.0 || !inc.is_finite()) return inc;
  return {inc.nats + gamma * ideficiency(pdg, mu).nats};
}

/// [M]_gamma(mu) as one expectation over joint states:
///   E_w { sum_L [ b_L log 1/p_L(t|s) + (g a_L - b_L) log 1/mu(t|s) ] - g log 1/mu(w) }.
/// Only defined when every confidence is finite.
inline Score gamma_score_expectation_form(const Pdg& pdg, const JointTable& mu, double gamma) {
  detail::require_same_space(pdg, mu);
  for (const auto& e : pdg.edges())
    if (e.is_hard())
      throw Error(ErrorCode::AlternatePathUnavailable, "edge " + e.label + " has infinite confidence");
  const auto& probs = mu.probs();
  std::vector<double> acc(probs.size(), 0.0);
  for (const auto& e : pdg.edges()) {
    auto ix = detail::edge_index(pdg.variables(), e.cpd);
    auto m = detail::edge_marginals(ix, e.cpd, probs);
    double b = e.beta.value(), k = gamma * e.alpha - b;
    for (std::size_t w = 0; w < probs.size(); ++w) {
      if (probs[w] <= 0.0) continue;
      std::size_t r = ix.row[w], c = ix.col[w];
      double p = e.cpd(r, c);
      if (b > 0.0) {
        if (p <= 0.0) return Score::infinity();
        acc[w] -= b * std::log(p);
      }
      if (k != 0.0) acc[w] -= k * std::log(m.st[r * e.cpd.cols() + c] / m.s[r]);
    }
  }
  double total = 0.0;
  for (std::size_t w = 0; w < probs.size(); ++w)
    if (probs[w] > 0.0) total += probs[w] * (acc[w] + gamma * std::log(probs[w]));
  return {total};
}

} // namespace pdgloss

#endif // PDGLOSS_SCORING_HPP
