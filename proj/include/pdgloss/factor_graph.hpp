#ifndef PDGLOSS_FACTOR_GRAPH_HPP
#define PDGLOSS_FACTOR_GRAPH_HPP

#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "numeric.hpp"
#include "solver.hpp"

namespace pdgloss {

struct Factor {
  std::string name;
  VariableList scope;
  std::vector<double> values;  // row-major over scope, first variable slowest
  double theta = 1.0;
};

class WeightedFactorGraph {
public:
  WeightedFactorGraph(VariableList variables, std::vector<Factor> factors, std::size_t max_cells = kDefaultMaxCells)
      : variables_(std::move(variables)), factors_(std::move(factors)), max_cells_(max_cells) {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      for (std::size_t j = i + 1; j < variables_.size(); ++j)
        if (variables_[i].name == variables_[j].name)
          throw Error(ErrorCode::DuplicateVariable, "variable " + variables_[i].name + " declared twice");
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      auto& f = factors_[k];
      if (f.name.empty()) f.name = "f" + std::to_string(k);
      for (const auto& v : f.scope) {
        auto it = std::find_if(variables_.begin(), variables_.end(), [&](const Variable& u) { return u.name == v.name; });
        if (it == variables_.end()) throw Error(ErrorCode::UnknownVariable, "factor " + f.name + " uses undeclared " + v.name);
        if (*it != v) throw Error(ErrorCode::ShapeMismatch, "factor " + f.name + " disagrees on the domain of " + v.name);
      }
      if (f.values.size() != product_size(f.scope))
        throw Error(ErrorCode::ShapeMismatch, "factor " + f.name + " has " + std::to_string(f.values.size()) +
                                                  " values, scope needs " + std::to_string(product_size(f.scope)));
      bool positive = false;
      for (double v : f.values) {
        if (!(v >= 0.0) || !std::isfinite(v))
          throw Error(ErrorCode::InvalidArgument, "factor " + f.name + " has a negative or non-finite value");
        positive = positive || v > 0.0;
      }
      if (!positive) throw Error(ErrorCode::ZeroFactor, "factor " + f.name + " is identically zero");
      if (!std::isfinite(f.theta)) throw Error(ErrorCode::InvalidArgument, "factor " + f.name + " has a non-finite weight");
      for (std::size_t j = 0; j < k; ++j)
        if (factors_[j].name == f.name) throw Error(ErrorCode::DuplicateLabel, "factor " + f.name + " declared twice");
    }
    product_size(variables_, max_cells_);
  }

  const VariableList& variables() const { return variables_; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t max_cells() const { return max_cells_; }

  /// sum_J theta_J log phi_J(x_J) for every joint state; -inf where a
  /// factor with positive weight vanishes.
  std::vector<double> log_weights() const {
    std::size_t n = product_size(variables_, max_cells_);
    std::vector<double> lw(n, 0.0);
    for (const auto& f : factors_) {
      if (f.theta == 0.0) continue;
      auto ix = projection_index(variables_, f.scope);
      for (std::size_t w = 0; w < n; ++w) {
        double v = f.values[ix[w]];
        if (v > 0.0) {
          lw[w] += f.theta * std::log(v);
        } else if (f.theta > 0.0) {
          lw[w] = -kInf;
        } else {
          throw Error(ErrorCode::InvalidArgument, "factor " + f.name + " has a zero raised to a negative weight");
        }
      }
    }
    return lw;
  }

private:
  VariableList variables_;
  std::vector<Factor> factors_;
  std::size_t max_cells_;
};

struct PartitionFunction {
  double z;
  double log_z;
};

inline PartitionFunction partition_function(const WeightedFactorGraph& fg) {
  auto lw = fg.log_weights();
  double lz = log_sum_exp<double>(lw);
  return {std::exp(lz), lz};
}

/// The normalized Gibbs distribution over fg.variables().
inline JointTable gibbs_distribution(const WeightedFactorGraph& fg) {
  auto lw = fg.log_weights();
  double lz = log_sum_exp<double>(lw);
  if (!std::isfinite(lz)) throw Error(ErrorCode::ZeroFactor, "factors have no common support");
  for (auto& v : lw) v = std::exp(v - lz);
  double s = 0.0;
  for (double v : lw) s += v;
  for (auto& v : lw) v /= s;
  return JointTable(fg.variables(), std::move(lw));
}

/// One source-less edge per factor onto its scope, cpd = normalized factor,
/// alpha = beta = theta.
inline Pdg fg_to_pdg(const WeightedFactorGraph& fg) {
  std::vector<Edge> edges;
  for (const auto& f : fg.factors()) {
    if (f.theta < 0.0)
      throw Error(ErrorCode::InvalidArgument, "factor " + f.name + " has negative weight; PDG confidences are nonnegative");
    double s = 0.0;
    for (double v : f.values) s += v;
    std::vector<double> p(f.values);
    for (auto& v : p) v /= s;
    edges.push_back({f.name, Cpd::unconditional(f.scope, std::move(p)), Confidence(f.theta), f.theta});
  }
  return build_pdg(fg.variables(), std::move(edges), fg.max_cells());
}

struct FreeEnergyReport {
  double inconsistency = 0.0;         // solver <PDG>_1
  double neg_log_z = 0.0;             // -log Z of the raw factors
  double normalization_offset = 0.0;  // sum_J theta_J log sum phi_J
  double residual = 0.0;              // |inconsistency - (neg_log_z + offset)|
  double gibbs_tv = 0.0;              // TV(solver argmin, Gibbs distribution)
  SolveResult solve;
};

/// Compares the gamma = 1 inconsistency of fg_to_pdg(fg) with the free
/// energy. The cpds are normalized factors, so the two differ by the
/// weighted log normalizers; for normalized factors the offset is zero.
inline FreeEnergyReport free_energy_identity(const WeightedFactorGraph& fg, const SolveOptions& opt = {}) {
  auto pdg = fg_to_pdg(fg);
  FreeEnergyReport r;
  r.solve = min_gamma_score(pdg, 1.0, opt);
  r.inconsistency = r.solve.inconsistency.nats;
  r.neg_log_z = -partition_function(fg).log_z;
  for (const auto& f : fg.factors()) {
    double s = 0.0;
    for (double v : f.values) s += v;
    r.normalization_offset += f.theta * std::log(s);
  }
  r.residual = std::abs(r.inconsistency - (r.neg_log_z + r.normalization_offset));
  auto gibbs = gibbs_distribution(fg);
  for (std::size_t w = 0; w < gibbs.size(); ++w) r.gibbs_tv += std::abs(gibbs[w] - r.solve.argmin[w]);
  r.gibbs_tv *= 0.5;
  return r;
}

} // namespace pdgloss

#endif // PDGLOSS_FACTOR_GRAPH_HPP
