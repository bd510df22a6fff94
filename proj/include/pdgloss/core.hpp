#ifndef PDGLOSS_CORE_HPP
#define PDGLOSS_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "numeric.hpp"

namespace pdgloss {

enum class ErrorCode {
  UnknownVariable,
  InvalidCpd,
  DuplicateLabel,
  DuplicateVariable,
  ShapeMismatch,
  StateSpaceTooLarge,
  UnsupportedHardStructure,
  AmbiguousStructure,
  AlternatePathUnavailable,
  InvalidArgument,
  EmptyDataset,
  ZeroFactor,
  NotASimplex,
  UnknownLoss,
  SyntaxError,
  SemanticError,
  DuplicateName,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::InvalidCpd: return "InvalidCpd";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::DuplicateVariable: return "DuplicateVariable";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::UnsupportedHardStructure: return "UnsupportedHardStructure";
    case ErrorCode::AmbiguousStructure: return "AmbiguousStructure";
    case ErrorCode::AlternatePathUnavailable: return "AlternatePathUnavailable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ZeroFactor: return "ZeroFactor";
    case ErrorCode::NotASimplex: return "NotASimplex";
    case ErrorCode::UnknownLoss: return "UnknownLoss";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::SemanticError: return "SemanticError";
    case ErrorCode::DuplicateName: return "DuplicateName";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

inline constexpr std::size_t kDefaultMaxCells = 10'000'000;

/// A finite random variable: a name and an ordered list of value labels.
struct Variable {
  std::string name;
  std::vector<std::string> labels;

  Variable() = default;
  Variable(std::string n, std::vector<std::string> l) : name(std::move(n)), labels(std::move(l)) {
    if (name.empty()) throw Error(ErrorCode::InvalidArgument, "variable name is empty");
    if (labels.empty()) throw Error(ErrorCode::InvalidArgument, "variable " + name + " has an empty domain");
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j])
          throw Error(ErrorCode::DuplicateLabel, "value " + labels[i] + " repeated in domain of " + name);
  }

  /// Binary/k-ary helper: labels name0, name1, ...
  static Variable indexed(const std::string& name, std::size_t k, const std::string& prefix = "") {
    std::vector<std::string> l;
    std::string p = prefix.empty() ? lower(name) : prefix;
    for (std::size_t i = 0; i < k; ++i) l.push_back(p + std::to_string(i));
    return Variable(name, std::move(l));
  }

  std::size_t size() const { return labels.size(); }

  std::size_t index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return i;
    throw Error(ErrorCode::InvalidArgument, "value " + std::string(label) + " not in domain of " + name);
  }

  bool operator==(const Variable&) const = default;

private:
  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }
};

using VariableList = std::vector<Variable>;

inline std::size_t product_size(const VariableList& vars, std::size_t cap = kDefaultMaxCells) {
  std::size_t n = 1;
  for (const auto& v : vars) {
    if (n > cap / v.size())
      throw Error(ErrorCode::StateSpaceTooLarge, "product domain exceeds " + std::to_string(cap) + " cells");
    n *= v.size();
  }
  return n;
}

inline std::string describe(const VariableList& vars) {
  std::string s = "(";
  for (std::size_t i = 0; i < vars.size(); ++i) s += (i ? "," : "") + vars[i].name;
  return s + ")";
}

/// Confidence in an edge: a nonnegative real or infinity.
class Confidence {
public:
  Confidence(double v = 1.0) : value_(v) {
    if (std::isnan(v) || v < 0.0) throw Error(ErrorCode::InvalidArgument, "confidence must be nonnegative");
  }
  static Confidence infinite() { return Confidence(kInf); }

  bool is_infinite() const { return std::isinf(value_); }
  double value() const { return value_; }

  auto operator<=>(const Confidence&) const = default;

private:
  double value_;
};

/// Score in nats; may be +inf.
struct Score {
  double nats = 0.0;

  static Score infinity() { return {kInf}; }
  bool is_finite() const { return std::isfinite(nats); }
  double bits() const { return nats / kLn2; }
  auto operator<=>(const Score&) const = default;
};

/// Conditional probability table p(targets | sources). Rows are indexed by
/// the flattened source assignment, columns by the flattened target
/// assignment, first variable slowest.
class Cpd {
public:
  Cpd() = default;

  Cpd(VariableList sources, VariableList targets, std::vector<double> table)
      : sources_(std::move(sources)), targets_(std::move(targets)), table_(std::move(table)) {
    if (targets_.empty()) throw Error(ErrorCode::InvalidCpd, "cpd needs at least one target");
    check_distinct(sources_);
    check_distinct(targets_);
    rows_ = product_size(sources_);
    cols_ = product_size(targets_);
    if (table_.size() != rows_ * cols_)
      throw Error(ErrorCode::ShapeMismatch, "cpd table for " + describe(targets_) + "|" + describe(sources_) +
                                                " needs " + std::to_string(rows_ * cols_) + " entries, got " +
                                                std::to_string(table_.size()));
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols_; ++c) {
        double v = table_[r * cols_ + c];
        if (!(v >= 0.0) || !std::isfinite(v))
          throw Error(ErrorCode::InvalidCpd, "negative or non-finite entry in row " + std::to_string(r));
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidCpd, "row " + std::to_string(r) + " sums to " + std::to_string(s));
      for (std::size_t c = 0; c < cols_; ++c) table_[r * cols_ + c] /= s;
    }
  }

  static Cpd unconditional(VariableList targets, std::vector<double> probs) {
    return Cpd({}, std::move(targets), std::move(probs));
  }
  static Cpd unconditional(const Variable& target, std::vector<double> probs) {
    return Cpd({}, {target}, std::move(probs));
  }

  static Cpd point_mass(const Variable& v, std::size_t index) {
    std::vector<double> t(v.size(), 0.0);
    t.at(index) = 1.0;
    return Cpd({}, {v}, std::move(t));
  }

  /// Degenerate cpd of a function: row i puts all mass on column image[i].
  static Cpd function(VariableList sources, VariableList targets, const std::vector<std::size_t>& image) {
    std::size_t rows = product_size(sources), cols = product_size(targets);
    if (image.size() != rows) throw Error(ErrorCode::ShapeMismatch, "function table has wrong length");
    std::vector<double> t(rows * cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      if (image[r] >= cols) throw Error(ErrorCode::ShapeMismatch, "function value out of range");
      t[r * cols + image[r]] = 1.0;
    }
    return Cpd(std::move(sources), std::move(targets), std::move(t));
  }

  const VariableList& sources() const { return sources_; }
  const VariableList& targets() const { return targets_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t row, std::size_t col) const { return table_[row * cols_ + col]; }
  std::span<const double> row(std::size_t r) const { return {table_.data() + r * cols_, cols_}; }

  bool is_degenerate() const {
    for (double v : table_)
      if (v != 0.0 && v != 1.0) return false;
    return true;
  }

  bool operator==(const Cpd&) const = default;

private:
  static void check_distinct(const VariableList& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j)
        if (vs[i].name == vs[j].name) throw Error(ErrorCode::InvalidCpd, "variable " + vs[i].name + " repeated");
  }

  VariableList sources_;
  VariableList targets_;
  std::vector<double> table_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

struct Edge {
  std::string label;
  Cpd cpd;
  Confidence beta{1.0};
  double alpha = 1.0;

  bool is_hard() const { return beta.is_infinite(); }
};

/// Dense distribution over the product of `variables`, first variable slowest.
class JointTable {
public:
  JointTable() = default;
  JointTable(VariableList variables, std::vector<double> probs)
      : variables_(std::move(variables)), probs_(std::move(probs)) {
    if (probs_.size() != product_size(variables_))
      throw Error(ErrorCode::ShapeMismatch, "joint table over " + describe(variables_) + " has wrong size");
    double s = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "joint table has a negative entry");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-10) throw Error(ErrorCode::InvalidArgument, "joint table sums to " + std::to_string(s));
  }

  static JointTable uniform(VariableList variables) {
    std::size_t n = product_size(variables);
    return JointTable(std::move(variables), std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  const VariableList& variables() const { return variables_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  std::size_t position(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i].name == name) return i;
    throw Error(ErrorCode::UnknownVariable, std::string(name));
  }

private:
  VariableList variables_;
  std::vector<double> probs_;
};

/// For every state of `space`, the flattened index of its projection onto
/// `subset` (a list of variables that must all occur in `space`).
inline std::vector<std::size_t> projection_index(const VariableList& space, const VariableList& subset) {
  std::vector<std::size_t> pos(subset.size());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    auto it = std::find_if(space.begin(), space.end(), [&](const Variable& v) { return v.name == subset[k].name; });
    if (it == space.end()) throw Error(ErrorCode::UnknownVariable, subset[k].name);
    if (it->labels != subset[k].labels)
      throw Error(ErrorCode::ShapeMismatch, "domain of " + subset[k].name + " does not match");
    pos[k] = static_cast<std::size_t>(it - space.begin());
  }
  // Stride of each space variable within the subset index.
  std::vector<std::size_t> stride(space.size(), 0);
  std::size_t s = 1;
  for (std::size_t k = subset.size(); k-- > 0;) {
    stride[pos[k]] = s;
    s *= subset[k].size();
  }
  std::size_t n = product_size(space, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> out(n);
  std::vector<std::size_t> digit(space.size(), 0);
  std::size_t cur = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = cur;
    for (std::size_t v = space.size(); v-- > 0;) {
      if (++digit[v] < space[v].size()) {
        cur += stride[v];
        break;
      }
      cur -= stride[v] * (digit[v] - 1);
      digit[v] = 0;
    }
  }
  return out;
}

inline VariableList lookup(const VariableList& space, const std::vector<std::string>& names) {
  VariableList out;
  for (const auto& n : names) {
    auto it = std::find_if(space.begin(), space.end(), [&](const Variable& v) { return v.name == n; });
    if (it == space.end()) throw Error(ErrorCode::UnknownVariable, n);
    out.push_back(*it);
  }
  return out;
}

inline JointTable marginal(const JointTable& joint, const VariableList& subset) {
  auto idx = projection_index(joint.variables(), subset);
  std::vector<double> m(product_size(subset), 0.0);
  for (std::size_t i = 0; i < joint.size(); ++i) m[idx[i]] += joint[i];
  double s = 0.0;
  for (double v : m) s += v;
  for (double& v : m) v /= s;
  return JointTable(subset, std::move(m));
}

inline JointTable marginal(const JointTable& joint, const std::vector<std::string>& names) {
  return marginal(joint, lookup(joint.variables(), names));
}

/// Conditional of a joint; rows whose source assignment has zero mass are
/// reported in `undefined` and filled with a uniform placeholder.
struct ConditionalTable {
  Cpd cpd;
  std::vector<bool> defined;
};

inline ConditionalTable conditional(const JointTable& joint, const VariableList& targets, const VariableList& sources) {
  for (const auto& t : targets)
    for (const auto& s : sources)
      if (t.name == s.name) throw Error(ErrorCode::InvalidArgument, "targets and sources overlap on " + t.name);
  auto ri = projection_index(joint.variables(), sources);
  auto ci = projection_index(joint.variables(), targets);
  std::size_t rows = product_size(sources), cols = product_size(targets);
  std::vector<double> t(rows * cols, 0.0), rowsum(rows, 0.0);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    t[ri[i] * cols + ci[i]] += joint[i];
    rowsum[ri[i]] += joint[i];
  }
  std::vector<bool> defined(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    defined[r] = rowsum[r] > 0.0;
    for (std::size_t c = 0; c < cols; ++c)
      t[r * cols + c] = defined[r] ? t[r * cols + c] / rowsum[r] : 1.0 / static_cast<double>(cols);
  }
  return {Cpd(sources, targets, std::move(t)), std::move(defined)};
}

inline JointTable pushforward(const Cpd& cpd, const JointTable& dist) {
  if (dist.variables() != cpd.sources())
    throw Error(ErrorCode::ShapeMismatch, "distribution is over " + describe(dist.variables()) + ", cpd sources are " +
                                              describe(cpd.sources()));
  std::vector<double> out(cpd.cols(), 0.0);
  for (std::size_t r = 0; r < cpd.rows(); ++r)
    for (std::size_t c = 0; c < cpd.cols(); ++c) out[c] += dist[r] * cpd(r, c);
  return JointTable(cpd.targets(), std::move(out));
}

/// A validated probabilistic dependency graph. Edges are stored sorted by
/// label, which fixes the accumulation order for every score.
class Pdg {
public:
  const VariableList& variables() const { return variables_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t max_cells() const { return max_cells_; }
  std::size_t state_count() const { return product_size(variables_, max_cells_); }

  const Edge* find_edge(std::string_view label) const {
    for (const auto& e : edges_)
      if (e.label == label) return &e;
    return nullptr;
  }

  friend Pdg build_pdg(VariableList variables, std::vector<Edge> edges, std::size_t max_cells);

private:
  VariableList variables_;
  std::vector<Edge> edges_;
  std::size_t max_cells_ = kDefaultMaxCells;
};

inline Pdg build_pdg(VariableList variables, std::vector<Edge> edges, std::size_t max_cells = kDefaultMaxCells) {
  for (std::size_t i = 0; i < variables.size(); ++i)
    for (std::size_t j = i + 1; j < variables.size(); ++j)
      if (variables[i].name == variables[j].name)
        throw Error(ErrorCode::DuplicateVariable, "variable " + variables[i].name + " declared twice");
  product_size(variables, max_cells);
  auto check = [&](const Variable& v, const std::string& label) {
    auto it = std::find_if(variables.begin(), variables.end(), [&](const Variable& w) { return w.name == v.name; });
    if (it == variables.end())
      throw Error(ErrorCode::UnknownVariable, "edge " + label + " references undeclared variable " + v.name);
    if (it->labels != v.labels)
      throw Error(ErrorCode::ShapeMismatch, "edge " + label + " uses a different domain for " + v.name);
  };
  for (const auto& e : edges) {
    if (e.label.empty()) throw Error(ErrorCode::InvalidArgument, "edge label is empty");
    if (!(e.alpha >= 0.0) || !std::isfinite(e.alpha))
      throw Error(ErrorCode::InvalidArgument, "edge " + e.label + " has an invalid alpha");
    if (e.cpd.targets().empty()) throw Error(ErrorCode::InvalidCpd, "edge " + e.label + " has no cpd");
    for (const auto& v : e.cpd.sources()) check(v, e.label);
    for (const auto& v : e.cpd.targets()) check(v, e.label);
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.label < b.label; });
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i].label == edges[i - 1].label)
      throw Error(ErrorCode::DuplicateLabel, "edge label " + edges[i].label + " used twice");
  Pdg g;
  g.variables_ = std::move(variables);
  g.edges_ = std::move(edges);
  g.max_cells_ = max_cells;
  return g;
}

/// Returns a copy of `pdg` with `extra` added (labels must stay unique).
inline Pdg with_edges(const Pdg& pdg, const std::vector<Edge>& extra) {
  auto e = pdg.edges();
  e.insert(e.end(), extra.begin(), extra.end());
  return build_pdg(pdg.variables(), std::move(e), pdg.max_cells());
}

} // namespace pdgloss

#endif // PDGLOSS_CORE_HPP
