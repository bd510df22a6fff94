#ifndef PDGLOSS_SOLVER_HPP
#define PDGLOSS_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "closed_form.hpp"
#include "core.hpp"
#include "scoring.hpp"

namespace pdgloss {

struct SolveOptions {
  double tol = 1e-10;
  double stationarity = 1e-7;
  std::size_t max_iter = 100000;
  std::optional<std::size_t> restarts;  // default: 8 if gamma > 0, else 2
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct SolveResult {
  Score inconsistency;
  JointTable argmin;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t restarts_used = 0;
};

/// The set of joint distributions on which every hard (beta = inf) edge is
/// satisfied, described by the support it allows and an exact KL projection
/// onto it.
class FeasibleFamily {
public:
  explicit FeasibleFamily(const Pdg& pdg) : pdg_(&pdg) {
    const auto& edges = pdg.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) (edges[i].is_hard() ? hard_ : soft_).push_back(i);
    check_structure();
    for (const auto& v : pdg.variables()) {
      bool covered = false;
      for (auto i : hard_)
        for (const auto& t : edges[i].cpd.targets()) covered = covered || t.name == v.name;
      if (!covered) free_variables_.push_back(v);
    }
    build_support();
    if (!support_.empty()) {
      std::vector<double> mu(support_.size(), 1.0 / static_cast<double>(support_.size()));
      feasible_ = project(mu) <= kHardMatchTolerance;
    }
  }

  /// Hard edges in topological order (indices into pdg.edges()).
  const std::vector<std::size_t>& hard_edges() const { return hard_; }
  const std::vector<std::size_t>& soft_edges() const { return soft_; }
  /// Variables not pinned by any hard edge.
  const VariableList& free_variables() const { return free_variables_; }
  /// Joint states that can carry mass at finite score.
  const std::vector<std::size_t>& support() const { return support_; }
  bool feasible() const { return feasible_; }

  /// Dimension of the feasible set (support size minus the rank of the hard
  /// constraints); computed for supports up to 2048 states.
  std::optional<std::size_t> free_dimensions() const {
    if (!feasible_) return std::size_t{0};
    std::size_t n = support_.size();
    if (n > 2048) return std::nullopt;
    std::vector<std::vector<double>> a;
    a.emplace_back(n, 1.0);
    for (auto i : hard_) {
      const auto& cpd = pdg_->edges()[i].cpd;
      const auto& ix = index_[i];
      for (std::size_t r = 0; r < cpd.rows(); ++r)
        for (std::size_t c = 0; c < cpd.cols(); ++c) {
          std::vector<double> row(n, 0.0);
          bool any = false;
          for (std::size_t k = 0; k < n; ++k) {
            if (ix.row[k] != r) continue;
            row[k] = (ix.col[k] == c ? 1.0 : 0.0) - cpd(r, c);
            any = true;
          }
          if (any) a.push_back(std::move(row));
        }
    }
    return n - rank(a);
  }

  /// KL (I-)projection of a positive vector over support() onto the family,
  /// in place. Returns the largest remaining violation of a hard conditional.
  double project(std::vector<double>& mu) const {
    if (hard_.empty()) return 0.0;
    double viol = kInf;
    for (int pass = 0; pass < 500 && viol > 1e-14; ++pass) {
      for (auto i : hard_) project_edge(i, mu);
      viol = violation(mu);
    }
    return viol;
  }

  JointTable to_joint(std::span<const double> mu) const {
    std::vector<double> full(pdg_->state_count(), 0.0);
    double s = 0.0;
    for (double v : mu) s += v;
    for (std::size_t k = 0; k < support_.size(); ++k) full[support_[k]] = mu[k] / s;
    return JointTable(pdg_->variables(), std::move(full));
  }

  // Per-edge (row, column) of each support state.
  const detail::EdgeIndex& index(std::size_t edge) const { return index_[edge]; }

private:
  void check_structure() {
    const auto& edges = pdg_->edges();
    for (std::size_t a = 0; a < hard_.size(); ++a)
      for (std::size_t b = a + 1; b < hard_.size(); ++b)
        for (const auto& x : edges[hard_[a]].cpd.targets())
          for (const auto& y : edges[hard_[b]].cpd.targets())
            if (x.name == y.name)
              throw Error(ErrorCode::UnsupportedHardStructure, "hard edges " + edges[hard_[a]].label + " and " +
                                                                   edges[hard_[b]].label + " both target " + x.name);
    // Kahn's algorithm; ties broken by label order.
    auto feeds = [&](std::size_t a, std::size_t b) {
      for (const auto& t : edges[a].cpd.targets())
        for (const auto& s : edges[b].cpd.sources())
          if (t.name == s.name) return true;
      return false;
    };
    std::vector<std::size_t> order, pending = hard_;
    while (!pending.empty()) {
      auto it = std::find_if(pending.begin(), pending.end(), [&](std::size_t b) {
        return std::none_of(pending.begin(), pending.end(), [&](std::size_t a) { return feeds(a, b); });
      });
      if (it == pending.end()) {
        std::string names;
        for (auto i : pending) names += (names.empty() ? "" : ", ") + edges[i].label;
        throw Error(ErrorCode::UnsupportedHardStructure, "hard edges form a cycle: " + names);
      }
      order.push_back(*it);
      pending.erase(it);
    }
    hard_ = order;
  }

  void build_support() {
    const auto& edges = pdg_->edges();
    const auto& vars = pdg_->variables();
    std::size_t n = pdg_->state_count();
    std::vector<detail::EdgeIndex> full(edges.size());
    std::vector<char> keep(n, 1);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      full[i] = detail::edge_index(vars, edges[i].cpd);
      if (edges[i].beta.value() == 0.0) continue;
      for (std::size_t w = 0; w < n; ++w)
        if (edges[i].cpd(full[i].row[w], full[i].col[w]) <= 0.0) keep[w] = 0;
    }
    // A hard row is satisfiable only if every column it needs is reachable.
    for (bool changed = true; changed;) {
      changed = false;
      for (auto i : hard_) {
        const auto& cpd = edges[i].cpd;
        std::vector<char> has(cpd.rows() * cpd.cols(), 0);
        for (std::size_t w = 0; w < n; ++w)
          if (keep[w]) has[full[i].row[w] * cpd.cols() + full[i].col[w]] = 1;
        std::vector<char> bad(cpd.rows(), 0);
        for (std::size_t r = 0; r < cpd.rows(); ++r)
          for (std::size_t c = 0; c < cpd.cols(); ++c)
            if (cpd(r, c) > 0.0 && !has[r * cpd.cols() + c]) bad[r] = 1;
        for (std::size_t w = 0; w < n; ++w)
          if (keep[w] && bad[full[i].row[w]]) {
            keep[w] = 0;
            changed = true;
          }
      }
    }
    for (std::size_t w = 0; w < n; ++w)
      if (keep[w]) support_.push_back(w);
    index_.resize(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      index_[i].row.reserve(support_.size());
      index_[i].col.reserve(support_.size());
      for (auto w : support_) {
        index_[i].row.push_back(full[i].row[w]);
        index_[i].col.push_back(full[i].col[w]);
      }
    }
  }

  void project_edge(std::size_t i, std::vector<double>& mu) const {
    const auto& cpd = pdg_->edges()[i].cpd;
    auto m = detail::edge_marginals(index_[i], cpd, mu);
    std::vector<double> factor(cpd.rows() * cpd.cols(), 0.0);
    for (std::size_t r = 0; r < cpd.rows(); ++r) {
      if (m.s[r] <= 0.0) continue;
      double c = 0.0;
      for (std::size_t t = 0; t < cpd.cols(); ++t) c += xlogxy(cpd(r, t), m.st[r * cpd.cols() + t] / m.s[r]);
      if (std::isinf(c)) continue;
      double scale = m.s[r] * std::exp(-c);
      for (std::size_t t = 0; t < cpd.cols(); ++t) {
        double st = m.st[r * cpd.cols() + t];
        if (st > 0.0) factor[r * cpd.cols() + t] = scale * cpd(r, t) / st;
      }
    }
    double s = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) s += (mu[k] *= factor[index_[i].row[k] * cpd.cols() + index_[i].col[k]]);
    if (s > 0.0)
      for (auto& v : mu) v /= s;
  }

  double violation(const std::vector<double>& mu) const {
    double viol = 0.0;
    double total = 0.0;
    for (double v : mu) total += v;
    if (!(total > 0.0)) return kInf;
    for (auto i : hard_) {
      const auto& cpd = pdg_->edges()[i].cpd;
      auto m = detail::edge_marginals(index_[i], cpd, mu);
      for (std::size_t r = 0; r < cpd.rows(); ++r) {
        if (m.s[r] <= 0.0) continue;
        for (std::size_t c = 0; c < cpd.cols(); ++c)
          viol = std::max(viol, std::abs(m.st[r * cpd.cols() + c] / m.s[r] - cpd(r, c)));
      }
    }
    return viol;
  }

  static std::size_t rank(std::vector<std::vector<double>> a) {
    if (a.empty()) return 0;
    std::size_t cols = a[0].size(), rk = 0;
    for (std::size_t c = 0; c < cols && rk < a.size(); ++c) {
      std::size_t piv = rk;
      for (std::size_t r = rk; r < a.size(); ++r)
        if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
      if (std::abs(a[piv][c]) < 1e-10) continue;
      std::swap(a[piv], a[rk]);
      for (std::size_t r = 0; r < a.size(); ++r) {
        if (r == rk || a[r][c] == 0.0) continue;
        double f = a[r][c] / a[rk][c];
        for (std::size_t k = c; k < cols; ++k) a[r][k] -= f * a[rk][k];
      }
      ++rk;
    }
    return rk;
  }

  const Pdg* pdg_;
  std::vector<std::size_t> hard_;
  std::vector<std::size_t> soft_;
  VariableList free_variables_;
  std::vector<std::size_t> support_;
  std::vector<detail::EdgeIndex> index_;
  bool feasible_ = false;
};

inline FeasibleFamily feasible_family(const Pdg& pdg) { return FeasibleFamily(pdg); }

namespace detail {

// [M]_gamma restricted to the feasible family, on support coordinates.
class Objective {
public:
  Objective(const Pdg& pdg, const FeasibleFamily& fam, double gamma) : pdg_(pdg), fam_(fam), gamma_(gamma) {
    for (std::size_t i = 0; i < pdg.edges().size(); ++i) {
      const auto& e = pdg.edges()[i];
      bool scored = !e.is_hard() && e.beta.value() > 0.0;
      bool structural = gamma > 0.0 && e.alpha > 0.0;
      if (!scored && !structural) continue;
      Term t{i, scored ? e.beta.value() : 0.0, structural ? gamma * e.alpha : 0.0, {}};
      if (scored) {
        t.logp.resize(e.cpd.table().size());
        for (std::size_t k = 0; k < t.logp.size(); ++k) t.logp[k] = std::log(e.cpd.table()[k]);
      }
      terms_.push_back(std::move(t));
    }
  }

  double value(const std::vector<double>& mu) const {
    double f = 0.0;
    for (const auto& t : terms_) {
      const auto& cpd = pdg_.edges()[t.edge].cpd;
      auto m = edge_marginals(fam_.index(t.edge), cpd, mu);
      for (std::size_t r = 0; r < cpd.rows(); ++r) {
        if (m.s[r] <= 0.0) continue;
        for (std::size_t c = 0; c < cpd.cols(); ++c) {
          double st = m.st[r * cpd.cols() + c];
          if (st <= 0.0) continue;
          double lc = std::log(st / m.s[r]);
          if (t.beta > 0.0) f += t.beta * st * (lc - t.logp[r * cpd.cols() + c]);
          f -= t.alpha * st * lc;
        }
      }
    }
    if (gamma_ > 0.0)
      for (double v : mu) f += gamma_ * xlogx(v);
    return f;
  }

  void gradient(const std::vector<double>& mu, std::vector<double>& g) const {
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& t : terms_) {
      const auto& cpd = pdg_.edges()[t.edge].cpd;
      const auto& ix = fam_.index(t.edge);
      auto m = edge_marginals(ix, cpd, mu);
      std::vector<double> coef(m.st.size(), 0.0);
      for (std::size_t r = 0; r < cpd.rows(); ++r) {
        if (m.s[r] <= 0.0) continue;
        for (std::size_t c = 0; c < cpd.cols(); ++c) {
          std::size_t k = r * cpd.cols() + c;
          if (m.st[k] <= 0.0) continue;
          double lc = std::log(m.st[k] / m.s[r]);
          coef[k] = (t.beta - t.alpha) * lc - (t.beta > 0.0 ? t.beta * t.logp[k] : 0.0);
        }
      }
      for (std::size_t w = 0; w < mu.size(); ++w) g[w] += coef[ix.row[w] * cpd.cols() + ix.col[w]];
    }
    if (gamma_ > 0.0)
      for (std::size_t w = 0; w < mu.size(); ++w) g[w] += gamma_ * std::log(mu[w]);
  }

  double smoothness() const {
    double l = gamma_;
    for (const auto& t : terms_) l += t.beta + t.alpha;
    return std::max(l, 1e-3);
  }

private:
  struct Term {
    std::size_t edge;
    double beta;   // finite confidence if scored, else 0
    double alpha;  // gamma * alpha
    std::vector<double> logp;
  };

  const Pdg& pdg_;
  const FeasibleFamily& fam_;
  double gamma_;
  std::vector<Term> terms_;
};

struct RunResult {
  std::vector<double> mu;
  double value = kInf;
  std::size_t iterations = 0;
  bool converged = false;
};

inline constexpr double kFloor = 1e-300;

// Hard constraints count as met by an iterate when violated by at most this.
inline constexpr double kProjectionTolerance = 1e-11;

// One Bregman proximal step: next = Proj_C(mu * exp(-eta * g)). Returns the
// hard-constraint violation left after projecting (inf on overflow).
inline double prox_step(const FeasibleFamily& fam, const std::vector<double>& mu, const std::vector<double>& g,
                        double eta, std::vector<double>& next) {
  const std::size_t n = mu.size();
  double mx = -kInf;
  for (std::size_t w = 0; w < n; ++w) mx = std::max(mx, next[w] = std::log(mu[w]) - eta * g[w]);
  double s = 0.0;
  for (std::size_t w = 0; w < n; ++w) s += (next[w] = std::exp(next[w] - mx));
  for (auto& v : next) v = std::max(v / s, kFloor);
  double viol = fam.project(next);
  for (double v : next)
    if (!std::isfinite(v) || !(v >= 0.0)) return kInf;
  return viol;
}

inline RunResult mirror_descent(const Objective& obj, const FeasibleFamily& fam, std::vector<double> mu,
                                const SolveOptions& opt) {
  const std::size_t n = mu.size();
  if (fam.project(mu) > kProjectionTolerance) {
    std::fill(mu.begin(), mu.end(), 1.0 / static_cast<double>(n));
    fam.project(mu);
  }
  RunResult res;
  double f = obj.value(mu);
  const double eta0 = 1.0 / obj.smoothness();
  double eta = eta0;
  std::vector<double> g(n), next(n), probe(n);
  // Near the boundary of the feasible family the projection can fail to
  // restore the hard constraints; such steps are rejected like Armijo
  // failures, and the step may then shrink below 1/L.
  const double eta_min = eta0 * 1e-8;
  double change = kInf;
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    obj.gradient(mu, g);
    bool accepted = false;
    double fn = f;
    for (int bt = 0; bt < 200; ++bt) {
      if (prox_step(fam, mu, g, eta, next) > kProjectionTolerance) {
        if (eta <= eta_min) break;
        eta = std::max(eta * 0.5, eta_min);
        continue;
      }
      fn = obj.value(next);
      // Relative-smoothness (Bregman) sufficient-decrease test.
      double breg = 0.0, lin = 0.0;
      for (std::size_t w = 0; w < n; ++w) {
        lin += g[w] * (next[w] - mu[w]);
        breg += xlogxy(next[w], mu[w]) - next[w] + mu[w];
      }
      double slack = 1e-15 * (std::abs(f) + std::abs(fn));
      // eta0 = 1/L always satisfies the test; below it only roundoff fails.
      if (fn <= f + lin + breg / eta + slack || eta <= eta0) {
        accepted = true;
        break;
      }
      eta = std::max(eta * 0.5, eta0);
    }
    res.iterations = it + 1;
    if (!accepted) {
      // Stalled against the boundary: the value has stopped moving.
      res.converged = change < opt.tol * std::max(1.0, std::abs(f));
      break;
    }
    change = std::abs(f - fn);
    std::swap(mu, next);
    f = fn;
    if (change < opt.tol * std::max(1.0, std::abs(f))) {
      // Gradient mapping at the fixed scale 1/L, relative to L once L > 1 so
      // the test does not tighten as the objective is scaled up.
      obj.gradient(mu, g);
      if (prox_step(fam, mu, g, eta0, probe) <= kProjectionTolerance) {
        double r = 0.0;
        for (std::size_t w = 0; w < n; ++w) r += std::abs(probe[w] - mu[w]);
        if (r / eta0 < opt.stationarity * std::max(1.0, 1.0 / eta0)) {
          res.converged = true;
          break;
        }
      }
    }
    eta = std::min(eta * 2.0, 1e10);
  }
  res.mu = std::move(mu);
  res.value = f;
  return res;
}

} // namespace detail

inline SolveResult min_gamma_score(const Pdg& pdg, double gamma, const SolveOptions& opt = {}) {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be nonnegative");
  FeasibleFamily fam(pdg);
  if (!fam.feasible())
    return {Score::infinity(), JointTable::uniform(pdg.variables()), 0, true, 0};
  detail::Objective obj(pdg, fam, gamma);
  std::size_t starts = std::max<std::size_t>(1, opt.restarts.value_or(gamma > 0.0 ? 8 : 2));
  std::size_t n = fam.support().size();
  std::vector<detail::RunResult> runs(starts);
  auto run = [&](std::size_t k) {
    std::vector<double> mu(n, 1.0 / static_cast<double>(n));
    if (k > 0) {
      CounterRng rng(opt.seed, k);
      mu = rng.dirichlet_ones(n);
      for (auto& v : mu) v = std::max(v, detail::kFloor);
    }
    runs[k] = detail::mirror_descent(obj, fam, std::move(mu), opt);
  };
  unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(starts)));
  if (threads == 1) {
    for (std::size_t k = 0; k < starts; ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = t; k < starts; k += threads) run(k);
      });
    for (auto& th : pool) th.join();
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < starts; ++k)
    if (runs[k].value < runs[best].value) best = k;
  SolveResult out;
  out.argmin = fam.to_joint(runs[best].mu);
  out.inconsistency = gamma_score(pdg, out.argmin, gamma);
  for (const auto& r : runs) out.iterations += r.iterations;
  out.converged = runs[best].converged;
  out.restarts_used = starts;
  return out;
}

struct ChernoffResult {
  double value;
  double beta_star;
  bool degenerate = false;
};

/// Chernoff information sup_{b in (0,1)} -log sum p^b q^(1-b), the largest
/// PDG divergence with total confidence 1.
inline ChernoffResult chernoff_divergence(const std::vector<double>& p, const std::vector<double>& q,
                                          double tol = 1e-8) {
  detail::check_pair(p, q);
  if (p == q) return {0.0, 0.5, true};
  auto f = [&](double b) { return pdg_divergence(p, q, b, 1.0 - b); };
  double lo = 1e-6, hi = 1.0 - 1e-6;
  if (std::isinf(f(0.5))) return {kInf, 0.5, false};
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
  double fa = f(a), fb = f(b);
  while (hi - lo > tol) {
    if (fa > fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = f(b);
    }
  }
  double bs = 0.5 * (lo + hi);
  return {f(bs), bs, false};
}

inline ChernoffResult chernoff_divergence(const Cpd& p, const Cpd& q, double tol = 1e-8) {
  if (!p.sources().empty() || !q.sources().empty() || p.targets() != q.targets())
    throw Error(ErrorCode::ShapeMismatch, "Chernoff divergence needs two unconditional cpds on the same variables");
  return chernoff_divergence(p.table(), q.table(), tol);
}

/// Product of the hard cpds, when each variable is the target of exactly one
/// hard edge (a Bayesian network).
inline JointTable hard_product(const Pdg& pdg, const FeasibleFamily& fam) {
  if (!fam.free_variables().empty())
    throw Error(ErrorCode::AmbiguousStructure, "variable " + fam.free_variables().front().name +
                                                   " is not pinned by a hard edge");
  std::size_t n = pdg.state_count();
  std::vector<double> mu(n, 1.0);
  for (auto i : fam.hard_edges()) {
    const auto& cpd = pdg.edges()[i].cpd;
    auto ix = detail::edge_index(pdg.variables(), cpd);
    for (std::size_t w = 0; w < n; ++w) mu[w] *= cpd(ix.row[w], ix.col[w]);
  }
  return JointTable(pdg.variables(), std::move(mu));
}

/// lim_{gamma -> inf} <M>_gamma for PDGs whose hard edges form a Bayesian
/// network with alpha = 1; the limit is the incompatibility of the soft
/// edges at the product of the hard cpds.
inline Score limit_gamma_inf(const Pdg& pdg) {
  FeasibleFamily fam(pdg);
  for (auto i : fam.hard_edges())
    if (pdg.edges()[i].alpha != 1.0)
      throw Error(ErrorCode::AmbiguousStructure, "hard edge " + pdg.edges()[i].label + " needs alpha = 1");
  JointTable mu = hard_product(pdg, fam);
  for (auto i : fam.soft_edges()) {
    const auto& e = pdg.edges()[i];
    if (e.alpha == 0.0) continue;
    auto ix = detail::edge_index(pdg.variables(), e.cpd);
    if (detail::conditional_entropy(e.cpd, detail::edge_marginals(ix, e.cpd, mu.probs())) > 1e-12)
      throw Error(ErrorCode::AmbiguousStructure,
                  "soft edge " + e.label + " has alpha > 0 and a non-deterministic target under the hard product");
  }
  return incompatibility(pdg, mu);
}

} // namespace pdgloss

#endif // PDGLOSS_SOLVER_HPP
