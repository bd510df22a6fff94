#ifndef PDGLOSS_FG_INSTANCES_HPP
#define PDGLOSS_FG_INSTANCES_HPP

#include <pdgloss/factor_graph.hpp>

#include "test_support.hpp"

namespace pdgtest {

// Up to 4 binary/ternary variables, up to 4 factors, theta in [0.2, 2].
inline WeightedFactorGraph random_factor_graph(Rng& rng, std::size_t max_vars = 4, std::size_t max_factors = 4) {
  static const char* names[] = {"A", "B", "C", "D"};
  VariableList vars;
  std::size_t nv = 1 + rng.below(max_vars);
  for (std::size_t i = 0; i < nv; ++i) vars.push_back(Variable::indexed(names[i], 2 + rng.below(2)));
  std::vector<Factor> factors;
  std::size_t nf = 1 + rng.below(max_factors);
  for (std::size_t k = 0; k < nf; ++k) {
    VariableList scope;
    for (const auto& v : vars)
      if (rng.coin()) scope.push_back(v);
    if (scope.empty()) scope.push_back(vars[rng.below(vars.size())]);
    std::vector<double> values(product_size(scope));
    for (auto& v : values) v = rng.uniform(0.05, 3.0);
    factors.push_back({"J" + std::to_string(k), scope, values, rng.uniform(0.2, 2.0)});
  }
  return WeightedFactorGraph(vars, factors);
}

// Brute-force partition function: direct product of powers, no logs.
inline double enumerate_z(const WeightedFactorGraph& fg) {
  const auto& vars = fg.variables();
  std::size_t n = product_size(vars);
  double z = 0.0;
  for (std::size_t w = 0; w < n; ++w) {
    std::vector<std::size_t> val(vars.size());
    std::size_t rest = w;
    for (std::size_t i = vars.size(); i-- > 0;) {
      val[i] = rest % vars[i].size();
      rest /= vars[i].size();
    }
    double prod = 1.0;
    for (const auto& f : fg.factors()) {
      std::size_t idx = 0;
      for (const auto& s : f.scope) {
        std::size_t pos = 0;
        while (vars[pos].name != s.name) ++pos;
        idx = idx * s.size() + val[pos];
      }
      prod *= std::pow(f.values[idx], f.theta);
    }
    z += prod;
  }
  return z;
}

} // namespace pdgtest

#endif // PDGLOSS_FG_INSTANCES_HPP
