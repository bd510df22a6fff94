#ifndef PDGLOSS_LOSS_ZOO_HPP
#define PDGLOSS_LOSS_ZOO_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "closed_form.hpp"
#include "core.hpp"
#include "scoring.hpp"
#include "solver.hpp"

namespace pdgloss {

/// A list of records over some variables; the empirical distribution is
/// count / m, with counts kept as integers until the final division.
class Dataset {
public:
  Dataset(VariableList variables, std::vector<std::vector<std::size_t>> records)
      : variables_(std::move(variables)), records_(std::move(records)) {
    if (records_.empty()) throw Error(ErrorCode::EmptyDataset, "dataset over " + describe(variables_) + " is empty");
    for (const auto& r : records_) {
      if (r.size() != variables_.size()) throw Error(ErrorCode::ShapeMismatch, "record has the wrong arity");
      for (std::size_t k = 0; k < r.size(); ++k)
        if (r[k] >= variables_[k].size()) throw Error(ErrorCode::ShapeMismatch, "record value out of range");
    }
  }

  static Dataset from_labels(VariableList variables, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::vector<std::size_t>> recs;
    for (const auto& row : rows) {
      if (row.size() != variables.size()) throw Error(ErrorCode::ShapeMismatch, "record has the wrong arity");
      std::vector<std::size_t> r;
      for (std::size_t k = 0; k < row.size(); ++k) r.push_back(variables[k].index_of(row[k]));
      recs.push_back(std::move(r));
    }
    return Dataset(std::move(variables), std::move(recs));
  }

  const VariableList& variables() const { return variables_; }
  const std::vector<std::vector<std::size_t>>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  /// Flattened index of record i in the product domain (first variable slowest).
  std::size_t flat(std::size_t i) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < variables_.size(); ++k) idx = idx * variables_[k].size() + records_[i][k];
    return idx;
  }

  std::vector<double> empirical_probs() const {
    std::vector<std::size_t> counts(product_size(variables_), 0);
    for (std::size_t i = 0; i < records_.size(); ++i) ++counts[flat(i)];
    std::vector<double> p(counts.size());
    for (std::size_t k = 0; k < p.size(); ++k)
      p[k] = static_cast<double>(counts[k]) / static_cast<double>(records_.size());
    return p;
  }

  JointTable empirical() const { return JointTable(variables_, empirical_probs()); }
  Cpd as_cpd() const { return Cpd::unconditional(variables_, empirical_probs()); }

private:
  VariableList variables_;
  std::vector<std::vector<std::size_t>> records_;
};

struct LossReport {
  std::string name;
  std::optional<Pdg> pdg;
  Score direct;
  Score inconsistency;
  Score correction;
  double discrepancy = 0.0;
  double tolerance = 1e-5;
  std::optional<SolveResult> solve;
  std::vector<std::pair<std::string, double>> extras;

  bool ok() const { return discrepancy <= tolerance; }

  double extra(const std::string& key) const {
    for (const auto& [k, v] : extras)
      if (k == key) return v;
    throw Error(ErrorCode::InvalidArgument, "report has no entry " + key);
  }
};

namespace detail {

inline double gap(double a, double b) {
  if (std::isinf(a) && std::isinf(b)) return 0.0;
  return std::abs(a - b);
}

inline void finish(LossReport& r) {
  double rhs = r.inconsistency.nats + r.correction.nats;
  r.discrepancy = gap(r.direct.nats, rhs);
}

inline LossReport solved(std::string name, Pdg pdg, double direct, double correction, const SolveOptions& opt,
                         double gamma = 0.0) {
  LossReport r;
  r.name = std::move(name);
  auto s = min_gamma_score(pdg, gamma, opt);
  r.inconsistency = s.inconsistency;
  r.solve = std::move(s);
  r.pdg = std::move(pdg);
  r.direct = {direct};
  r.correction = {correction};
  finish(r);
  return r;
}

inline double neg_log(double p) { return p > 0.0 ? -std::log(p) : kInf; }

inline const Variable& single_target(const Cpd& p, const char* what) {
  if (!p.sources().empty() || p.targets().size() != 1)
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must be an unconditional cpd on one variable");
  return p.targets()[0];
}

inline double conditional_entropy_of(const JointTable& joint, const VariableList& targets, const VariableList& sources) {
  VariableList all = sources;
  all.insert(all.end(), targets.begin(), targets.end());
  return entropy(marginal(joint, all).probs()) - (sources.empty() ? 0.0 : entropy(marginal(joint, sources).probs()));
}

} // namespace detail

inline const Confidence kHardEdge = Confidence::infinite();

inline std::string event_label(const Variable& v, std::size_t index) { return v.name + "=" + v.labels.at(index); }

inline Edge event_edge(const Variable& v, std::size_t index) {
  return {event_label(v, index), Cpd::point_mass(v, index), kHardEdge};
}

/// -log p(x) as the inconsistency of {p, x}.
inline LossReport surprisal_pdg(const Cpd& p, std::size_t x, const SolveOptions& opt = {}) {
  const Variable& v = detail::single_target(p, "p");
  auto g = build_pdg({v}, {{"p", p}, event_edge(v, x)});
  return detail::solved("surprisal", std::move(g), detail::neg_log(p(0, x)), 0.0, opt);
}

/// Cross-entropy of p relative to a dataset, plus the gamma-invariant form
/// <M>_gamma + (1 + gamma) H(D) for gamma in {0.5, 1}. Both edges carry
/// alpha = 0, which is what makes that form independent of gamma.
inline LossReport cross_entropy_pdg(const Cpd& p, const Dataset& data, const SolveOptions& opt = {}) {
  const Variable& v = detail::single_target(p, "p");
  if (data.variables() != VariableList{v}) throw Error(ErrorCode::ShapeMismatch, "dataset must be over " + v.name);
  double ce = 0.0;
  for (const auto& r : data.records()) ce += detail::neg_log(p(0, r[0]));
  ce /= static_cast<double>(data.size());
  double h = entropy(data.empirical_probs());
  auto g = build_pdg({v}, {{"p", p, 1.0, 0.0}, {"D", data.as_cpd(), kHardEdge, 0.0}});
  auto rep = detail::solved("cross-entropy", g, ce, h, opt);
  double worst = rep.discrepancy;
  for (double gamma : {0.5, 1.0}) {
    double val = min_gamma_score(g, gamma, opt).inconsistency.nats;
    double res = detail::gap(ce, val + (1.0 + gamma) * h);
    rep.extras.push_back({"gamma=" + std::to_string(gamma).substr(0, 3) + " residual", res});
    worst = std::max(worst, res);
  }
  rep.discrepancy = worst;
  return rep;
}

/// -log p(x) for a joint p(X, Z) observed only at X = x (X = first target).
inline LossReport marginal_nll_pdg(const Cpd& p, std::size_t x, const SolveOptions& opt = {}) {
  if (!p.sources().empty() || p.targets().size() < 2)
    throw Error(ErrorCode::ShapeMismatch, "p must be an unconditional joint over (X, Z...)");
  const Variable& v = p.targets()[0];
  std::size_t rest = p.cols() / v.size();
  double px = 0.0;
  for (std::size_t z = 0; z < rest; ++z) px += p(0, x * rest + z);
  auto g = build_pdg(p.targets(), {{"p", p}, event_edge(v, x)});
  return detail::solved("marginal-nll", std::move(g), detail::neg_log(px), 0.0, opt);
}

/// Average marginal negative log-likelihood of a dataset over X.
inline LossReport marginal_nll_dataset_pdg(const Cpd& p, const Dataset& data, const SolveOptions& opt = {}) {
  if (!p.sources().empty() || p.targets().size() < 2)
    throw Error(ErrorCode::ShapeMismatch, "p must be an unconditional joint over (X, Z...)");
  const Variable& v = p.targets()[0];
  if (data.variables() != VariableList{v}) throw Error(ErrorCode::ShapeMismatch, "dataset must be over " + v.name);
  std::size_t rest = p.cols() / v.size();
  double nll = 0.0;
  for (const auto& r : data.records()) {
    double px = 0.0;
    for (std::size_t z = 0; z < rest; ++z) px += p(0, r[0] * rest + z);
    nll += detail::neg_log(px);
  }
  nll /= static_cast<double>(data.size());
  auto g = build_pdg(p.targets(), {{"p", p}, {"D", data.as_cpd(), kHardEdge}});
  return detail::solved("marginal-nll", std::move(g), nll, entropy(data.empirical_probs()), opt);
}

/// Cross-entropy of a classifier h(Y|X) on labelled data over (X, Y).
inline LossReport supervised_ce_pdg(const Cpd& h, const Dataset& data, const SolveOptions& opt = {}) {
  if (h.sources().size() != 1 || h.targets().size() != 1)
    throw Error(ErrorCode::ShapeMismatch, "h must map one variable to one variable");
  VariableList xy{h.sources()[0], h.targets()[0]};
  if (data.variables() != xy) throw Error(ErrorCode::ShapeMismatch, "dataset must be over " + describe(xy));
  double ce = 0.0;
  for (const auto& r : data.records()) ce += detail::neg_log(h(r[0], r[1]));
  ce /= static_cast<double>(data.size());
  double hc = detail::conditional_entropy_of(data.empirical(), {xy[1]}, {xy[0]});
  auto g = build_pdg(xy, {{"D", data.as_cpd(), kHardEdge}, {"h", h}});
  return detail::solved("supervised-ce", std::move(g), ce, hc, opt);
}

/// beta_D times the negative log accuracy of h against labels f.
inline LossReport accuracy_pdg(const Cpd& f, const Cpd& h, const Cpd& d, Confidence beta_d, Confidence beta_f,
                               Confidence beta_h, const SolveOptions& opt = {}) {
  if (!f.is_degenerate() || !h.is_degenerate()) throw Error(ErrorCode::InvalidCpd, "f and h must be deterministic");
  if (f.sources() != h.sources() || f.targets() != h.targets() || f.sources().size() != 1 || f.targets().size() != 1)
    throw Error(ErrorCode::ShapeMismatch, "f and h must both map X to Y");
  const Variable& x = detail::single_target(d, "D");
  if (f.sources()[0] != x) throw Error(ErrorCode::ShapeMismatch, "D must be over the input of f and h");
  if (beta_f.value() == 0.0 || beta_h.value() == 0.0)
    throw Error(ErrorCode::InvalidArgument, "f and h need positive confidence");
  double agree = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t y = 0; y < f.cols(); ++y)
      if (f(i, y) == 1.0 && h(i, y) == 1.0) agree += d(0, i);
  double direct = agree > 0.0 ? (beta_d.is_infinite() ? (agree >= 1.0 - 1e-12 ? 0.0 : kInf)
                                                      : -beta_d.value() * std::log(agree))
                              : kInf;
  auto make = [&](Confidence bf, Confidence bh) {
    return build_pdg({x, f.targets()[0]}, {{"D", d, beta_d}, {"f", f, bf}, {"h", h, bh}});
  };
  auto rep = detail::solved("accuracy", make(beta_f, beta_h), direct, 0.0, opt);
  auto bump = [](Confidence c) { return c.is_infinite() ? c : Confidence(c.value() * 2.5 + 0.5); };
  double other = min_gamma_score(make(bump(beta_f), Confidence(beta_h.is_infinite() ? 0.7 : beta_h.value() * 0.4)), 0.0,
                                 opt).inconsistency.nats;
  rep.extras.push_back({"perturbed_inconsistency", other});
  rep.extras.push_back({"accuracy", agree});
  rep.discrepancy = std::max(rep.discrepancy, detail::gap(other, rep.inconsistency.nats));
  return rep;
}

/// Unit Gaussian noise around two regressors f, h on a finite X; the value is
/// the closed-form Gaussian inconsistency, averaged over the data.
inline LossReport mse_pdg(const std::vector<double>& f, const std::vector<double>& h, const Dataset& data) {
  if (data.variables().size() != 1 || f.size() != data.variables()[0].size() || h.size() != f.size())
    throw Error(ErrorCode::ShapeMismatch, "f and h must give one value per input");
  auto d = data.empirical_probs();
  double sq = 0.0;
  std::vector<GaussianBelief> a, b;
  for (std::size_t i = 0; i < f.size(); ++i) {
    sq += d[i] * (f[i] - h[i]) * (f[i] - h[i]);
    a.push_back({f[i], 1.0, 1.0});
    b.push_back({h[i], 1.0, 1.0});
  }
  LossReport r;
  r.name = "mse";
  r.direct = {kMseCoefficient * sq};
  r.inconsistency = {two_gaussian_inconsistency(a, b, d)};
  r.correction = {0.0};
  r.extras.push_back({"mean_squared_error", sq});
  r.extras.push_back({"quoted_coefficient_gap", std::abs(kMseCoefficientQuoted * sq - r.inconsistency.nats)});
  detail::finish(r);
  return r;
}

/// Discretized prior q(theta) proportional to exp(-energy(value)) on a grid.
inline Cpd energy_prior(const Variable& theta, const std::vector<double>& grid, const std::function<double(double)>& energy) {
  if (grid.size() != theta.size()) throw Error(ErrorCode::ShapeMismatch, "grid must have one point per value");
  std::vector<double> w(grid.size());
  double mn = kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) mn = std::min(mn, w[i] = energy(grid[i]));
  double s = 0.0;
  for (auto& v : w) s += (v = std::exp(-(v - mn)));
  for (auto& v : w) v /= s;
  return Cpd::unconditional(theta, std::move(w));
}

/// Cross-entropy of p(Y|theta) on data plus beta_q log 1/q(theta).
inline LossReport regularized_pdg(const Cpd& p, const Cpd& q, std::size_t theta, const Dataset& data, double beta_q,
                                  const SolveOptions& opt = {}) {
  const Variable& t = detail::single_target(q, "q");
  if (p.sources() != VariableList{t} || p.targets().size() != 1)
    throw Error(ErrorCode::ShapeMismatch, "p must map the parameter to one variable");
  const Variable& y = p.targets()[0];
  if (data.variables() != VariableList{y}) throw Error(ErrorCode::ShapeMismatch, "dataset must be over " + y.name);
  double ce = 0.0;
  for (const auto& r : data.records()) ce += detail::neg_log(p(theta, r[0]));
  ce /= static_cast<double>(data.size());
  double reg = beta_q == 0.0 ? 0.0 : beta_q * detail::neg_log(q(0, theta));
  auto g = build_pdg({t, y}, {{"p", p}, {"q", q, beta_q}, event_edge(t, theta), {"D", data.as_cpd(), kHardEdge}});
  auto rep = detail::solved("regularized", std::move(g), ce + reg, entropy(data.empirical_probs()), opt);
  rep.extras.push_back({"regularizer", reg});
  return rep;
}

/// -ELBO of a joint p(X, Z) with variational q(Z) at X = x.
inline LossReport elbo_pdg(const Cpd& p, const Cpd& q, std::size_t x, const SolveOptions& opt = {}) {
  if (!p.sources().empty() || p.targets().size() != 2)
    throw Error(ErrorCode::ShapeMismatch, "p must be an unconditional joint over (X, Z)");
  const Variable& xv = p.targets()[0];
  const Variable& zv = p.targets()[1];
  if (detail::single_target(q, "q") != zv) throw Error(ErrorCode::ShapeMismatch, "q must be over " + zv.name);
  double neg_elbo = 0.0, px = 0.0;
  for (std::size_t z = 0; z < zv.size(); ++z) {
    double pz = p(0, x * zv.size() + z), qz = q(0, z);
    px += pz;
    if (qz > 0.0) neg_elbo += pz > 0.0 ? qz * std::log(qz / pz) : kInf;
  }
  auto g = build_pdg({xv, zv}, {{"p", p}, {"q", q, kHardEdge}, event_edge(xv, x)});
  auto rep = detail::solved("elbo", std::move(g), neg_elbo, 0.0, opt);
  rep.extras.push_back({"neg_log_evidence", detail::neg_log(px)});
  return rep;
}

namespace detail {

struct VaeParts {
  const Variable& x;
  const Variable& z;
};

inline VaeParts vae_parts(const Cpd& prior, const Cpd& e, const Cpd& d) {
  const Variable& z = single_target(prior, "prior");
  if (e.sources().size() != 1 || e.targets() != VariableList{z} || d.sources() != VariableList{z} ||
      d.targets() != e.sources())
    throw Error(ErrorCode::ShapeMismatch, "need encoder e(Z|X) and decoder d(X|Z)");
  return {e.sources()[0], z};
}

inline double neg_log_evidence(const Cpd& prior, const Cpd& d, std::size_t x) {
  double px = 0.0;
  for (std::size_t z = 0; z < prior.cols(); ++z) px += prior(0, z) * d(z, x);
  return neg_log(px);
}

} // namespace detail

/// Rec(x) + beta KL(e(Z|x) || prior); beta = 1 is the negative ELBO and
/// beta = 0 the reconstruction error.
inline LossReport vae_elbo_pdg(const Cpd& prior, const Cpd& e, const Cpd& d, std::size_t x, double beta,
                               const SolveOptions& opt = {}) {
  auto [xv, zv] = detail::vae_parts(prior, e, d);
  double rec = 0.0, kl = 0.0;
  for (std::size_t z = 0; z < zv.size(); ++z) {
    double ez = e(x, z);
    if (ez <= 0.0) continue;
    rec += d(z, x) > 0.0 ? -ez * std::log(d(z, x)) : kInf;
    kl += xlogxy(ez, prior(0, z));
  }
  double direct = beta == 0.0 ? rec : rec + beta * kl;
  auto g = build_pdg({xv, zv}, {{"e", e, kHardEdge}, event_edge(xv, x), {"d", d}, {"prior", prior, beta}});
  auto rep = detail::solved(beta == 1.0 ? "vae-elbo" : "beta-elbo", std::move(g), direct, 0.0, opt);
  rep.extras.push_back({"reconstruction", rec});
  rep.extras.push_back({"kl", kl});
  rep.extras.push_back({"neg_log_evidence", detail::neg_log_evidence(prior, d, x)});
  return rep;
}

/// Average negative ELBO over a dataset on X.
inline LossReport vae_elbo_dataset_pdg(const Cpd& prior, const Cpd& e, const Cpd& d, const Dataset& data,
                                       const SolveOptions& opt = {}) {
  auto [xv, zv] = detail::vae_parts(prior, e, d);
  if (data.variables() != VariableList{xv}) throw Error(ErrorCode::ShapeMismatch, "dataset must be over " + xv.name);
  double total = 0.0, nle = 0.0;
  for (const auto& r : data.records()) {
    std::size_t x = r[0];
    for (std::size_t z = 0; z < zv.size(); ++z) {
      double ez = e(x, z);
      if (ez <= 0.0) continue;
      total += (d(z, x) > 0.0 && prior(0, z) > 0.0) ? ez * (std::log(ez) - std::log(d(z, x)) - std::log(prior(0, z)))
                                                    : kInf;
    }
    nle += detail::neg_log_evidence(prior, d, x);
  }
  double m = static_cast<double>(data.size());
  auto g = build_pdg({xv, zv}, {{"e", e, kHardEdge}, {"D", data.as_cpd(), kHardEdge}, {"d", d}, {"prior", prior}});
  auto rep = detail::solved("vae-elbo", std::move(g), total / m, entropy(data.empirical_probs()), opt);
  rep.extras.push_back({"neg_log_evidence", nle / m});
  return rep;
}

/// Expected cost E_p c as an inconsistency: an extra binary variable T whose
/// "t" value has likelihood exp(-c(x)), observed at T = t. With soft = true
/// the belief in p is finite (confidence 1) and the value becomes
/// -log E_p exp(-c).
inline LossReport expected_cost_pdg(const Cpd& p, const std::vector<double>& cost, bool soft = false,
                                    const SolveOptions& opt = {}) {
  const Variable& x = detail::single_target(p, "p");
  if (cost.size() != x.size()) throw Error(ErrorCode::ShapeMismatch, "need one cost per value of " + x.name);
  Variable t("T", {"t", "f"});
  if (x.name == "T") throw Error(ErrorCode::InvalidArgument, "variable name T is reserved here");
  std::vector<double> table;
  double mean = 0.0, mgf = 0.0;
  for (std::size_t i = 0; i < cost.size(); ++i) {
    if (!(cost[i] >= 0.0) || !std::isfinite(cost[i])) throw Error(ErrorCode::InvalidArgument, "costs must be finite and >= 0");
    double e = std::exp(-cost[i]);
    table.push_back(e);
    table.push_back(1.0 - e);
    mean += p(0, i) * cost[i];
    mgf += p(0, i) * e;
  }
  auto g = build_pdg({x, t}, {{"c", Cpd({x}, {t}, table)},
                              {"p", p, soft ? Confidence(1.0) : kHardEdge},
                              event_edge(t, 0)});
  return detail::solved(soft ? "expected-cost-soft" : "expected-cost", std::move(g), soft ? -std::log(mgf) : mean, 0.0,
                        opt);
}

namespace detail {

inline void check_scenario(const Cpd& s, const Cpd& d, const Cpd& h, double lambda_s, double lambda_d) {
  if (!(lambda_s > 0 && lambda_d > 0) || std::abs(lambda_s + lambda_d - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "lambdas must be positive and sum to 1");
  if (!s.sources().empty() || s.targets().size() != 2 || d.targets() != s.targets() || !d.sources().empty())
    throw Error(ErrorCode::ShapeMismatch, "s and d must be joints over (X, Y)");
  if (h.sources() != VariableList{s.targets()[0]} || h.targets() != VariableList{s.targets()[1]})
    throw Error(ErrorCode::ShapeMismatch, "h must map X to Y");
}

} // namespace detail

/// Cross-entropy of h against the lambda-mixture of s and d, through a
/// switch variable Z choosing between them.
inline LossReport scenario_l1_pdg(const Cpd& s, const Cpd& d, const Cpd& h, double lambda_s, double lambda_d,
                                  const SolveOptions& opt = {}) {
  detail::check_scenario(s, d, h, lambda_s, lambda_d);
  const Variable& x = s.targets()[0];
  const Variable& y = s.targets()[1];
  const std::size_t nx = x.size(), ny = y.size();
  Variable z("Z", {"sim", "dat"});
  std::vector<double> m(nx * ny), sw;
  double l1 = 0.0;
  for (std::size_t k = 0; k < nx * ny; ++k) {
    m[k] = lambda_s * s(0, k) + lambda_d * d(0, k);
    if (m[k] > 0.0) l1 += m[k] * detail::neg_log(h(k / ny, k % ny));
  }
  sw.insert(sw.end(), s.table().begin(), s.table().end());
  sw.insert(sw.end(), d.table().begin(), d.table().end());
  auto g = build_pdg({z, x, y}, {{"lambda", Cpd::unconditional(z, {lambda_s, lambda_d}), kHardEdge},
                                 {"switch", Cpd({z}, {x, y}, sw), kHardEdge},
                                 {"h", h}});
  double hm = detail::conditional_entropy_of(JointTable({x, y}, m), {y}, {x});
  return detail::solved("scenario-l1", std::move(g), l1, hm, opt);
}

/// L2 = E_d[s log 1/h] against its large-gamma form
/// C <M2>_gamma + C H_nu(Y|X) + gamma C log C, with C = sum s d and nu = s d / C.
struct ScenarioL2 {
  double value = 0.0;
  double approx = 0.0;
  double gamma = 0.0;
  double scale = 0.0;
};

inline ScenarioL2 scenario_l2(const Cpd& s, const Cpd& d, const Cpd& h, double gamma = 1e3,
                              const SolveOptions& opt = {}) {
  detail::check_scenario(s, d, h, 0.5, 0.5);
  const Variable& x = s.targets()[0];
  const Variable& y = s.targets()[1];
  const std::size_t n = x.size() * y.size(), ny = y.size();
  std::vector<double> nu(n);
  double c = 0.0, l2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    nu[k] = s(0, k) * d(0, k);
    c += nu[k];
    if (nu[k] > 0.0) l2 += nu[k] * detail::neg_log(h(k / ny, k % ny));
  }
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "s and d have disjoint supports");
  for (auto& v : nu) v /= c;
  auto g = build_pdg({x, y}, {{"s", s, gamma, 1.0}, {"d", d, gamma, 1.0}, {"h", h, 1.0, 0.0}});
  double m2 = min_gamma_score(g, gamma, opt).inconsistency.nats;
  double hnu = detail::conditional_entropy_of(JointTable({x, y}, nu), {y}, {x});
  return {l2, c * m2 + c * hnu + gamma * c * std::log(c), gamma, c};
}

/// L3: <{s, d, h}> with confidences (lambda_s, lambda_d, 1), and the h that
/// minimizes it, compared with the normalized lambda-weighted geometric mean
/// of s(Y|x) and d(Y|x).
struct ScenarioL3 {
  double value = 0.0;
  Cpd optimal_h;
  Cpd geometric_mean;
  double gap = 0.0;  // max abs difference of the two
  double at_optimum = 0.0;
};

inline ScenarioL3 scenario_l3(const Cpd& s, const Cpd& d, const Cpd& h, double lambda_s, double lambda_d,
                              const SolveOptions& opt = {}) {
  detail::check_scenario(s, d, h, lambda_s, lambda_d);
  const Variable& x = s.targets()[0];
  const Variable& y = s.targets()[1];
  const std::size_t nx = x.size(), ny = y.size();
  ScenarioL3 out;
  auto with_h = build_pdg({x, y}, {{"s", s, lambda_s}, {"d", d, lambda_d}, {"h", h}});
  out.value = min_gamma_score(with_h, 0.0, opt).inconsistency.nats;
  auto without = build_pdg({x, y}, {{"s", s, lambda_s}, {"d", d, lambda_d}});
  auto sol = min_gamma_score(without, 0.0, opt);
  out.optimal_h = conditional(sol.argmin, {y}, {x}).cpd;
  std::vector<double> gm(nx * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    double sx = 0.0, dx = 0.0, tot = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
      sx += s(0, i * ny + j);
      dx += d(0, i * ny + j);
    }
    for (std::size_t j = 0; j < ny; ++j) {
      double sc = sx > 0 ? s(0, i * ny + j) / sx : 0.0, dc = dx > 0 ? d(0, i * ny + j) / dx : 0.0;
      tot += (gm[i * ny + j] = std::pow(sc, lambda_s) * std::pow(dc, lambda_d));
    }
    for (std::size_t j = 0; j < ny; ++j) gm[i * ny + j] = tot > 0 ? gm[i * ny + j] / tot : 1.0 / static_cast<double>(ny);
  }
  out.geometric_mean = Cpd({x}, {y}, gm);
  for (std::size_t k = 0; k < gm.size(); ++k)
    out.gap = std::max(out.gap, std::abs(gm[k] - out.optimal_h.table()[k]));
  auto at_opt = build_pdg({x, y}, {{"s", s, lambda_s}, {"d", d, lambda_d}, {"h", out.optimal_h}});
  out.at_optimum = min_gamma_score(at_opt, 0.0, opt).inconsistency.nats;
  return out;
}

struct ScenarioReport {
  LossReport l1;
  ScenarioL2 l2;
  ScenarioL3 l3;
};

inline ScenarioReport scenario_losses(const Cpd& s, const Cpd& d, const Cpd& h, double lambda_s, double lambda_d,
                                      double gamma = 1e3, const SolveOptions& opt = {}) {
  return {scenario_l1_pdg(s, d, h, lambda_s, lambda_d, opt), scenario_l2(s, d, h, gamma, opt),
          scenario_l3(s, d, h, lambda_s, lambda_d, opt)};
}

/// Supervised PDG whose gamma -> inf inconsistency is the expected loss
/// E_{(x,y)~D, y'~h(x)} loss(y, y'). The loss enters through a binary T with
/// likelihood exp(-loss) of "t", observed at T = t.
inline LossReport supervised_limit_pdg(const Dataset& data, const Cpd& h, const std::vector<std::vector<double>>& loss,
                                       const SolveOptions& opt = {}) {
  if (data.variables().size() != 2) throw Error(ErrorCode::ShapeMismatch, "dataset must be over (X, Y)");
  const Variable& x = data.variables()[0];
  const Variable& y = data.variables()[1];
  if (h.sources() != VariableList{x} || h.targets().size() != 1)
    throw Error(ErrorCode::ShapeMismatch, "h must map X to a prediction variable");
  const Variable& yp = h.targets()[0];
  if (loss.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "loss needs one row per label");
  Variable t("T", {"t", "f"});
  std::vector<double> table;
  for (std::size_t a = 0; a < y.size(); ++a) {
    if (loss[a].size() != yp.size()) throw Error(ErrorCode::ShapeMismatch, "loss needs one column per prediction");
    for (std::size_t b = 0; b < yp.size(); ++b) {
      if (!(loss[a][b] >= 0.0) || !std::isfinite(loss[a][b]))
        throw Error(ErrorCode::InvalidArgument, "losses must be finite and >= 0");
      double e = std::exp(-loss[a][b]);
      table.push_back(e);
      table.push_back(1.0 - e);
    }
  }
  auto emp = data.empirical_probs();
  double l = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t a = 0; a < y.size(); ++a)
      for (std::size_t b = 0; b < yp.size(); ++b) l += emp[i * y.size() + a] * h(i, b) * loss[a][b];
  auto g = build_pdg({x, y, yp, t}, {{"D", data.as_cpd(), kHardEdge},
                                     {"h", h, kHardEdge},
                                     {"l", Cpd({y, yp}, {t}, table)},
                                     event_edge(t, 0)});
  LossReport rep;
  rep.name = "supervised-limit";
  rep.direct = {l};
  rep.inconsistency = limit_gamma_inf(g);
  rep.correction = {0.0};
  rep.tolerance = 1e-9;
  // At gamma = 0 the problem is a linear program whose optimum sits on the
  // boundary, where mirror descent crawls. Every iterate is feasible, so a
  // capped run still gives an upper bound on <S>_0.
  SolveOptions capped = opt;
  capped.max_iter = std::min<std::size_t>(opt.max_iter, 500);
  auto squirm = min_gamma_score(g, 0.0, capped);
  rep.extras.push_back({"gamma0_upper_bound", squirm.inconsistency.nats});
  rep.extras.push_back({"gamma0_converged", squirm.converged ? 1.0 : 0.0});
  rep.pdg = std::move(g);
  detail::finish(rep);
  return rep;
}

} // namespace pdgloss

#endif // PDGLOSS_LOSS_ZOO_HPP
