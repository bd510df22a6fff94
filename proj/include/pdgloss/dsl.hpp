#ifndef PDGLOSS_DSL_HPP
#define PDGLOSS_DSL_HPP

// Line-oriented model files:
//
//   var X {x0, x1}
//   cpd p : -> X = [0.25, 0.75]
//   cpd h : X -> Y = [[0.9, 0.1], [0.2, 0.8]]
//   edge p beta=1 alpha=1
//   event X = x0 beta=inf
//   data D over (X, Y) {(x0, y0), (x0, y1)}
//   factor J over (X) = [1, 3] theta=1
//   query inconsistency gamma=0
//
// A newline ends a statement unless it sits inside brackets. `#` starts a
// comment.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "core.hpp"
#include "factor_graph.hpp"
#include "loss_zoo.hpp"

namespace pdgloss::dsl {

/// Source position (1-based). Spans never take part in equality.
struct Span {
  std::size_t line = 0;
  std::size_t column = 0;
  bool operator==(const Span&) const { return true; }
};

class ParseError : public Error {
public:
  ParseError(ErrorCode code, Span at, std::string token, const std::string& msg)
      : Error(code, "line " + std::to_string(at.line) + ", column " + std::to_string(at.column) + ": " + msg +
                        (token.empty() ? "" : " near '" + token + "'")),
        span_(at), token_(std::move(token)) {}
  Span span() const { return span_; }
  const std::string& token() const { return token_; }

private:
  Span span_;
  std::string token_;
};

struct VarDecl {
  std::string name;
  std::vector<std::string> labels;
  Span span;
  bool operator==(const VarDecl&) const = default;
};

/// Unconditional cpds hold a single row.
struct CpdDecl {
  std::string name;
  std::vector<std::string> sources;
  std::vector<std::string> targets;
  std::vector<std::vector<double>> rows;
  Span span;
  bool operator==(const CpdDecl&) const = default;
};

/// An edge carrying the cpd or dataset called `name`.
struct EdgeDecl {
  std::string name;
  double beta = 1.0;
  double alpha = 1.0;
  Span span;
  bool operator==(const EdgeDecl&) const = default;
};

struct EventDecl {
  std::string variable;
  std::string value;
  double beta = kInf;
  double alpha = 1.0;
  Span span;
  bool operator==(const EventDecl&) const = default;
  std::string label() const { return variable + "=" + value; }
};

struct DataDecl {
  std::string name;
  std::vector<std::string> variables;
  std::vector<std::vector<std::string>> records;
  Span span;
  bool operator==(const DataDecl&) const = default;
};

struct FactorDecl {
  std::string name;
  std::vector<std::string> scope;
  std::vector<double> values;
  double theta = 1.0;
  Span span;
  bool operator==(const FactorDecl&) const = default;
};

using AttrValue = std::variant<double, std::string, std::vector<double>>;

struct Attr {
  std::string key;
  AttrValue value;
  bool operator==(const Attr&) const = default;
};

struct QueryDecl {
  std::string kind;
  std::vector<std::string> args;
  std::vector<Attr> attrs;
  Span span;
  bool operator==(const QueryDecl&) const = default;

  const AttrValue* find(std::string_view key) const {
    for (const auto& a : attrs)
      if (a.key == key) return &a.value;
    return nullptr;
  }
  std::optional<double> number(std::string_view key) const {
    auto* v = find(key);
    if (!v) return std::nullopt;
    if (auto* d = std::get_if<double>(v)) return *d;
    throw ParseError(ErrorCode::SemanticError, span, std::string(key), "query attribute must be a number");
  }
  std::optional<std::vector<double>> list(std::string_view key) const {
    auto* v = find(key);
    if (!v) return std::nullopt;
    if (auto* d = std::get_if<std::vector<double>>(v)) return *d;
    throw ParseError(ErrorCode::SemanticError, span, std::string(key), "query attribute must be a list");
  }
};

struct Document {
  std::vector<VarDecl> vars;
  std::vector<CpdDecl> cpds;
  std::vector<DataDecl> data;
  std::vector<FactorDecl> factors;
  std::vector<EdgeDecl> edges;
  std::vector<EventDecl> events;
  std::vector<QueryDecl> queries;
  bool operator==(const Document&) const = default;

  const VarDecl* find_var(std::string_view n) const { return find(vars, n); }
  const CpdDecl* find_cpd(std::string_view n) const { return find(cpds, n); }
  const DataDecl* find_data(std::string_view n) const { return find(data, n); }
  const EdgeDecl* find_edge(std::string_view n) const { return find(edges, n); }

private:
  template <class T>
  static const T* find(const std::vector<T>& xs, std::string_view n) {
    for (const auto& x : xs)
      if (x.name == n) return &x;
    return nullptr;
  }
};

namespace detail {

enum class Tok { Word, Punct, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  Span at;
};

inline bool is_punct(char c) {
  return c == '{' || c == '}' || c == '[' || c == ']' || c == '(' || c == ')' || c == ',' || c == '=' || c == ':';
}

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, depth = 0;
  std::size_t i = 0;
  auto advance = [&](std::size_t k) {
    i += k;
    col += k;
  };
  while (i < src.size()) {
    char c = src[i];
    Span at{line, col};
    if (c == '\n') {
      if (depth == 0) out.push_back({Tok::Newline, "", at});
      ++i;
      ++line;
      col = 1;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      advance(1);
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
    } else if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      out.push_back({Tok::Punct, "->", at});
      advance(2);
    } else if (is_punct(c)) {
      if (c == '{' || c == '[' || c == '(') ++depth;
      if ((c == '}' || c == ']' || c == ')') && depth > 0) --depth;
      out.push_back({Tok::Punct, std::string(1, c), at});
      advance(1);
    } else if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
      throw ParseError(ErrorCode::SyntaxError, at, "", "unexpected control character");
    } else {
      std::size_t j = i;
      while (j < src.size()) {
        char d = src[j];
        if (d == ' ' || d == '\t' || d == '\r' || d == '\n' || d == '#' || is_punct(d)) break;
        if (d == '-' && j + 1 < src.size() && src[j + 1] == '>') break;
        if (static_cast<unsigned char>(d) < 0x20 || d == 0x7f) break;
        ++j;
      }
      out.push_back({Tok::Word, std::string(src.substr(i, j - i)), at});
      advance(j - i);
    }
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'')) return false;
  return true;
}

inline std::optional<double> to_number(std::string_view s) {
  if (s == "inf" || s == "+inf") return kInf;
  if (s.empty()) return std::nullopt;
  const char* b = s.data();
  if (*b == '+') {
    ++b;
    if (b == s.data() + s.size() || *b == '-') return std::nullopt;
  }
  double v = 0.0;
  auto [p, ec] = std::from_chars(b, s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || std::isnan(v)) return std::nullopt;
  // from_chars also takes "infinity" spellings; only `inf` is a keyword.
  if (std::isinf(v)) return std::nullopt;
  return v;
}

class Parser {
public:
  explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

  Document run() {
    Document doc;
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Newline) {
        ++pos_;
        continue;
      }
      statement(doc);
      if (peek().kind != Tok::Newline && peek().kind != Tok::End) fail("expected end of statement");
    }
    return doc;
  }

private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::End) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(peek(), msg); }
  [[noreturn]] static void fail_at(const Token& t, const std::string& msg) {
    std::string shown = t.kind == Tok::Newline ? "end of line" : t.kind == Tok::End ? "end of input" : t.text;
    throw ParseError(ErrorCode::SyntaxError, t.at, shown, msg);
  }

  bool at_punct(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }
  void expect(std::string_view p) {
    if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }
  bool accept(std::string_view p) {
    if (!at_punct(p)) return false;
    ++pos_;
    return true;
  }
  std::string word(const char* what) {
    if (peek().kind != Tok::Word) fail(std::string("expected ") + what);
    return next().text;
  }
  std::string name(const char* what) {
    if (peek().kind != Tok::Word || !is_identifier(peek().text)) fail(std::string("expected ") + what);
    return next().text;
  }
  double number(bool allow_inf = false) {
    if (peek().kind != Tok::Word) fail("expected a number");
    auto v = to_number(peek().text);
    if (!v || (!allow_inf && std::isinf(*v))) fail("expected a finite number");
    ++pos_;
    return *v;
  }

  std::vector<std::string> name_list(const char* what) {
    std::vector<std::string> out{name(what)};
    while (accept(",")) out.push_back(name(what));
    return out;
  }

  std::vector<double> number_list() {
    expect("[");
    std::vector<double> out;
    if (accept("]")) return out;
    do out.push_back(number());
    while (accept(","));
    expect("]");
    return out;
  }

  // key=value pairs; `keys` restricts the accepted names.
  std::map<std::string, double> numeric_attrs(std::initializer_list<const char*> keys) {
    std::map<std::string, double> out;
    while (peek().kind == Tok::Word) {
      const Token& k = next();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* s) { return k.text == s; }))
        fail_at(k, "unknown attribute");
      if (out.count(k.text)) fail_at(k, "attribute given twice");
      expect("=");
      out[k.text] = number(true);
    }
    return out;
  }

  void statement(Document& doc) {
    const Token& kw = peek();
    if (kw.kind != Tok::Word) fail("expected a declaration keyword");
    Span at = kw.at;
    std::string k = next().text;
    if (k == "var") {
      VarDecl v{name("variable name"), {}, at};
      expect("{");
      v.labels.push_back(word("value label"));
      while (accept(",")) v.labels.push_back(word("value label"));
      expect("}");
      doc.vars.push_back(std::move(v));
    } else if (k == "cpd") {
      CpdDecl c{name("cpd name"), {}, {}, {}, at};
      expect(":");
      if (!at_punct("->")) c.sources = name_list("source variable");
      expect("->");
      c.targets = name_list("target variable");
      expect("=");
      expect("[");
      if (at_punct("[")) {
        c.rows.push_back(number_list());
        while (accept(",")) c.rows.push_back(number_list());
        expect("]");
      } else {
        --pos_;
        c.rows.push_back(number_list());
      }
      doc.cpds.push_back(std::move(c));
    } else if (k == "edge") {
      EdgeDecl e{name("cpd or data name"), 1.0, 1.0, at};
      auto a = numeric_attrs({"beta", "alpha"});
      if (a.count("beta")) e.beta = a["beta"];
      if (a.count("alpha")) e.alpha = a["alpha"];
      doc.edges.push_back(std::move(e));
    } else if (k == "event") {
      EventDecl e{name("variable name"), {}, kInf, 1.0, at};
      expect("=");
      e.value = word("value label");
      auto a = numeric_attrs({"beta", "alpha"});
      if (a.count("beta")) e.beta = a["beta"];
      if (a.count("alpha")) e.alpha = a["alpha"];
      doc.events.push_back(std::move(e));
    } else if (k == "data") {
      DataDecl d{name("data name"), {}, {}, at};
      if (word("'over'") != "over") fail_at(toks_[pos_ - 1], "expected 'over'");
      expect("(");
      d.variables = name_list("variable name");
      expect(")");
      expect("{");
      if (!at_punct("}")) {
        do {
          expect("(");
          std::vector<std::string> r{word("value label")};
          while (accept(",")) r.push_back(word("value label"));
          expect(")");
          d.records.push_back(std::move(r));
        } while (accept(","));
      }
      expect("}");
      doc.data.push_back(std::move(d));
    } else if (k == "factor") {
      FactorDecl f{name("factor name"), {}, {}, 1.0, at};
      if (word("'over'") != "over") fail_at(toks_[pos_ - 1], "expected 'over'");
      expect("(");
      f.scope = name_list("variable name");
      expect(")");
      expect("=");
      f.values = number_list();
      auto a = numeric_attrs({"theta"});
      if (a.count("theta")) f.theta = a["theta"];
      doc.factors.push_back(std::move(f));
    } else if (k == "query") {
      QueryDecl q{name("query kind"), {}, {}, at};
      while (peek().kind == Tok::Word) {
        const Token& w = next();
        if (!at_punct("=")) {
          if (!q.attrs.empty()) fail_at(w, "positional argument after attributes");
          q.args.push_back(w.text);
          continue;
        }
        if (!is_identifier(w.text)) fail_at(w, "expected an attribute name");
        if (q.find(w.text)) fail_at(w, "attribute given twice");
        expect("=");
        if (at_punct("[")) {
          q.attrs.push_back({w.text, number_list()});
        } else if (peek().kind == Tok::Word && to_number(peek().text)) {
          q.attrs.push_back({w.text, number(true)});
        } else {
          q.attrs.push_back({w.text, word("attribute value")});
        }
      }
      doc.queries.push_back(std::move(q));
    } else {
      fail_at(kw, "unknown declaration");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

[[noreturn]] inline void semantic(Span at, const std::string& token, const std::string& msg,
                                  ErrorCode code = ErrorCode::SemanticError) {
  throw ParseError(code, at, token, msg);
}

inline void validate(const Document& doc) {
  std::map<std::string, const VarDecl*> vars;
  for (const auto& v : doc.vars) {
    if (vars.count(v.name)) semantic(v.span, v.name, "variable declared twice", ErrorCode::DuplicateName);
    vars[v.name] = &v;
    std::set<std::string> seen;
    for (const auto& l : v.labels)
      if (!seen.insert(l).second) semantic(v.span, l, "value repeated in domain of " + v.name);
  }
  auto domain = [&](const std::string& n, Span at) -> const VarDecl& {
    auto it = vars.find(n);
    if (it == vars.end()) semantic(at, n, "undeclared variable");
    return *it->second;
  };
  auto size_of = [&](const std::vector<std::string>& names, Span at, const std::string& owner) {
    std::size_t n = 1;
    std::set<std::string> seen;
    for (const auto& v : names) {
      if (!seen.insert(v).second) semantic(at, v, owner + " lists a variable twice");
      std::size_t k = domain(v, at).labels.size();
      if (n > kDefaultMaxCells / k) semantic(at, owner, "table is too large");
      n *= k;
    }
    return n;
  };
  auto label_index = [&](const std::string& var, const std::string& value, Span at) {
    const auto& labels = domain(var, at).labels;
    auto it = std::find(labels.begin(), labels.end(), value);
    if (it == labels.end()) semantic(at, value, "value not in domain of " + var);
    return static_cast<std::size_t>(it - labels.begin());
  };

  std::set<std::string> names;
  auto claim = [&](const std::string& n, Span at) {
    if (!names.insert(n).second) semantic(at, n, "name declared twice", ErrorCode::DuplicateName);
  };

  for (const auto& c : doc.cpds) {
    claim(c.name, c.span);
    std::size_t rows = size_of(c.sources, c.span, "cpd " + c.name);
    std::size_t cols = size_of(c.targets, c.span, "cpd " + c.name);
    for (const auto& s : c.sources)
      if (std::find(c.targets.begin(), c.targets.end(), s) != c.targets.end())
        semantic(c.span, s, "cpd " + c.name + " has " + s + " as both source and target");
    if (c.rows.size() != rows)
      semantic(c.span, c.name,
               "cpd " + c.name + " needs " + std::to_string(rows) + " row(s), got " + std::to_string(c.rows.size()));
    for (std::size_t r = 0; r < c.rows.size(); ++r) {
      if (c.rows[r].size() != cols)
        semantic(c.span, c.name,
                 "cpd " + c.name + " row " + std::to_string(r) + " needs " + std::to_string(cols) + " entries, got " +
                     std::to_string(c.rows[r].size()));
      double s = 0.0;
      for (double v : c.rows[r]) {
        if (v < 0.0) semantic(c.span, c.name, "cpd " + c.name + " has a negative entry");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9)
        semantic(c.span, c.name, "cpd " + c.name + " row " + std::to_string(r) + " sums to " + std::to_string(s));
    }
  }
  for (const auto& d : doc.data) {
    claim(d.name, d.span);
    size_of(d.variables, d.span, "data " + d.name);
    if (d.records.empty()) semantic(d.span, d.name, "data " + d.name + " has no records");
    for (const auto& r : d.records) {
      if (r.size() != d.variables.size())
        semantic(d.span, d.name,
                 "data " + d.name + " record needs " + std::to_string(d.variables.size()) + " values, got " +
                     std::to_string(r.size()));
      for (std::size_t k = 0; k < r.size(); ++k) label_index(d.variables[k], r[k], d.span);
    }
  }
  for (const auto& f : doc.factors) {
    claim(f.name, f.span);
    std::size_t n = size_of(f.scope, f.span, "factor " + f.name);
    if (f.values.size() != n)
      semantic(f.span, f.name,
               "factor " + f.name + " needs " + std::to_string(n) + " values, got " + std::to_string(f.values.size()));
    bool positive = false;
    for (double v : f.values) {
      if (v < 0.0) semantic(f.span, f.name, "factor " + f.name + " has a negative value");
      positive = positive || v > 0.0;
    }
    if (!positive) semantic(f.span, f.name, "factor " + f.name + " is identically zero");
    if (std::isinf(f.theta)) semantic(f.span, f.name, "factor weight must be finite");
  }
  std::set<std::string> edge_names;
  auto check_weights = [&](double beta, double alpha, Span at, const std::string& who) {
    if (beta < 0.0) semantic(at, who, "beta must be nonnegative");
    if (alpha < 0.0 || std::isinf(alpha)) semantic(at, who, "alpha must be finite and nonnegative");
  };
  for (const auto& e : doc.edges) {
    if (!doc.find_cpd(e.name) && !doc.find_data(e.name)) semantic(e.span, e.name, "edge names no cpd or data");
    if (!edge_names.insert(e.name).second) semantic(e.span, e.name, "edge declared twice", ErrorCode::DuplicateName);
    check_weights(e.beta, e.alpha, e.span, e.name);
  }
  for (const auto& e : doc.events) {
    label_index(e.variable, e.value, e.span);
    if (!edge_names.insert(e.label()).second)
      semantic(e.span, e.label(), "event declared twice", ErrorCode::DuplicateName);
    check_weights(e.beta, e.alpha, e.span, e.label());
  }
}

inline std::string fmt_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v + 0.0);
  return buf;
}

inline std::string join(const std::vector<std::string>& xs, const char* sep = ", ") {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? sep : "") + xs[i];
  return s;
}

inline std::string fmt_list(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt_number(xs[i]);
  return s + "]";
}

} // namespace detail

/// Parses and validates. Every failure is a ParseError with a location.
inline Document parse(std::string_view text) {
  Document doc = detail::Parser(text).run();
  detail::validate(doc);
  return doc;
}

/// Declarations sorted by kind, then name. Queries keep their order.
inline Document canonical(Document doc) {
  auto by_name = [](const auto& a, const auto& b) { return a.name < b.name; };
  std::stable_sort(doc.vars.begin(), doc.vars.end(), by_name);
  std::stable_sort(doc.cpds.begin(), doc.cpds.end(), by_name);
  std::stable_sort(doc.data.begin(), doc.data.end(), by_name);
  std::stable_sort(doc.factors.begin(), doc.factors.end(), by_name);
  std::stable_sort(doc.edges.begin(), doc.edges.end(), by_name);
  std::stable_sort(doc.events.begin(), doc.events.end(),
                   [](const EventDecl& a, const EventDecl& b) { return a.label() < b.label(); });
  std::stable_sort(doc.queries.begin(), doc.queries.end(),
                   [](const QueryDecl& a, const QueryDecl& b) { return a.kind < b.kind; });
  return doc;
}

inline std::string serialize(const Document& input) {
  using detail::fmt_list;
  using detail::fmt_number;
  using detail::join;
  Document doc = canonical(input);
  std::string out;
  auto section = [&](bool nonempty) {
    if (nonempty && !out.empty()) out += "\n";
  };
  section(!doc.vars.empty());
  for (const auto& v : doc.vars) out += "var " + v.name + " {" + join(v.labels) + "}\n";
  section(!doc.cpds.empty());
  for (const auto& c : doc.cpds) {
    out += "cpd " + c.name + " : " + (c.sources.empty() ? "" : join(c.sources) + " ") + "-> " + join(c.targets) + " = ";
    if (c.sources.empty() && c.rows.size() == 1) {
      out += fmt_list(c.rows[0]);
    } else {
      out += "[";
      for (std::size_t r = 0; r < c.rows.size(); ++r) out += (r ? ", " : "") + fmt_list(c.rows[r]);
      out += "]";
    }
    out += "\n";
  }
  section(!doc.data.empty());
  for (const auto& d : doc.data) {
    out += "data " + d.name + " over (" + join(d.variables) + ") {";
    for (std::size_t i = 0; i < d.records.size(); ++i) out += (i ? ", (" : "(") + join(d.records[i]) + ")";
    out += "}\n";
  }
  section(!doc.factors.empty());
  for (const auto& f : doc.factors)
    out += "factor " + f.name + " over (" + join(f.scope) + ") = " + fmt_list(f.values) + " theta=" + fmt_number(f.theta) +
           "\n";
  section(!doc.edges.empty() || !doc.events.empty());
  for (const auto& e : doc.edges)
    out += "edge " + e.name + " beta=" + fmt_number(e.beta) + " alpha=" + fmt_number(e.alpha) + "\n";
  for (const auto& e : doc.events)
    out += "event " + e.variable + " = " + e.value + " beta=" + fmt_number(e.beta) + " alpha=" + fmt_number(e.alpha) +
           "\n";
  section(!doc.queries.empty());
  for (const auto& q : doc.queries) {
    out += "query " + q.kind;
    for (const auto& a : q.args) out += " " + a;
    for (const auto& a : q.attrs) {
      out += " " + a.key + "=";
      if (auto* d = std::get_if<double>(&a.value)) out += fmt_number(*d);
      else if (auto* s = std::get_if<std::string>(&a.value)) out += *s;
      else out += fmt_list(std::get<std::vector<double>>(a.value));
    }
    out += "\n";
  }
  return out;
}

// ---- conversion ------------------------------------------------------------

inline Variable variable(const Document& doc, std::string_view name) {
  auto* v = doc.find_var(name);
  if (!v) throw Error(ErrorCode::UnknownVariable, "no variable " + std::string(name));
  return Variable(v->name, v->labels);
}

inline VariableList variables(const Document& doc, const std::vector<std::string>& names) {
  VariableList out;
  for (const auto& n : names) out.push_back(variable(doc, n));
  return out;
}

inline VariableList variables(const Document& doc) {
  VariableList out;
  for (const auto& v : doc.vars) out.emplace_back(v.name, v.labels);
  return out;
}

inline Cpd cpd(const CpdDecl& c, const Document& doc) {
  std::vector<double> t;
  for (const auto& r : c.rows) t.insert(t.end(), r.begin(), r.end());
  return Cpd(variables(doc, c.sources), variables(doc, c.targets), std::move(t));
}

inline Dataset dataset(const DataDecl& d, const Document& doc) {
  return Dataset::from_labels(variables(doc, d.variables), d.records);
}

inline Pdg to_pdg(const Document& doc, std::size_t max_cells = kDefaultMaxCells) {
  std::vector<Edge> edges;
  for (const auto& e : doc.edges) {
    Cpd p = doc.find_cpd(e.name) ? cpd(*doc.find_cpd(e.name), doc) : dataset(*doc.find_data(e.name), doc).as_cpd();
    edges.push_back({e.name, std::move(p), Confidence(e.beta), e.alpha});
  }
  for (const auto& e : doc.events) {
    Variable v = variable(doc, e.variable);
    std::size_t idx = v.index_of(e.value);
    edges.push_back({e.label(), Cpd::point_mass(v, idx), Confidence(e.beta), e.alpha});
  }
  return build_pdg(variables(doc), std::move(edges), max_cells);
}

inline WeightedFactorGraph to_factor_graph(const Document& doc, std::size_t max_cells = kDefaultMaxCells) {
  std::vector<Factor> fs;
  for (const auto& f : doc.factors) fs.push_back({f.name, variables(doc, f.scope), f.values, f.theta});
  return WeightedFactorGraph(variables(doc), std::move(fs), max_cells);
}

/// Same variables and edges regardless of order, tables within tol.
inline bool equivalent(const Pdg& a, const Pdg& b, double tol = 1e-9) {
  auto sorted = [](VariableList v) {
    std::sort(v.begin(), v.end(), [](const Variable& x, const Variable& y) { return x.name < y.name; });
    return v;
  };
  if (sorted(a.variables()) != sorted(b.variables())) return false;
  if (a.edges().size() != b.edges().size()) return false;
  auto close = [&](double x, double y) { return x == y || std::abs(x - y) <= tol; };
  for (const auto& e : a.edges()) {
    const Edge* f = b.find_edge(e.label);
    if (!f) return false;
    if (e.cpd.sources() != f->cpd.sources() || e.cpd.targets() != f->cpd.targets()) return false;
    if (!close(e.beta.value(), f->beta.value()) || !close(e.alpha, f->alpha)) return false;
    for (std::size_t i = 0; i < e.cpd.table().size(); ++i)
      if (!close(e.cpd.table()[i], f->cpd.table()[i])) return false;
  }
  return true;
}

// ---- losses ----------------------------------------------------------------

inline const std::vector<std::string>& loss_names() {
  static const std::vector<std::string> names = {
      "surprisal",   "cross-entropy", "marginal-nll", "supervised-ce", "accuracy",      "mse",     "regularized",
      "elbo",        "vae-elbo",      "beta-elbo",    "expected-cost", "scenario",      "supervised-limit"};
  return names;
}

/// Per-run overrides; unset fields fall back to the document.
struct LossParams {
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<std::vector<double>> f;
  std::optional<std::vector<double>> h;
};

namespace detail {

class Resolver {
public:
  Resolver(const Document& doc, std::string loss) : doc_(doc), loss_(std::move(loss)) {}

  [[noreturn]] void missing(const std::string& what) const {
    throw Error(ErrorCode::SemanticError, "loss " + loss_ + " needs " + what);
  }

  Cpd cpd(const std::string& n) const {
    auto* c = doc_.find_cpd(n);
    if (!c) missing("a cpd named " + n);
    return dsl::cpd(*c, doc_);
  }
  bool has_data(const std::string& n) const { return doc_.find_data(n) != nullptr; }
  Dataset data(const std::string& n) const {
    auto* d = doc_.find_data(n);
    if (!d) missing("data named " + n);
    return dsl::dataset(*d, doc_);
  }
  Confidence beta(const std::string& n) const {
    auto* e = doc_.find_edge(n);
    if (!e) missing("an edge for " + n);
    return Confidence(e->beta);
  }
  bool has_event() const { return !doc_.events.empty(); }
  std::size_t event(const Variable& v) const {
    const EventDecl* found = nullptr;
    for (const auto& e : doc_.events)
      if (e.variable == v.name) {
        if (found) missing("exactly one event on " + v.name);
        found = &e;
      }
    if (!found) missing("an event on " + v.name);
    return v.index_of(found->value);
  }

private:
  const Document& doc_;
  std::string loss_;
};

inline double cost_of(double likelihood) {
  if (!(likelihood > 0.0)) throw Error(ErrorCode::SemanticError, "cost table has a zero likelihood");
  return std::max(0.0, -std::log(likelihood));
}

} // namespace detail

/// Runs the named loss on the cpds, data and events of `doc`. Arguments are
/// found by the edge labels the constructor uses (p, q, D, h, ...).
inline LossReport evaluate_loss(const std::string& name, const Document& doc, const LossParams& params = {},
                                const SolveOptions& opt = {}) {
  detail::Resolver r(doc, name);
  if (name == "surprisal") {
    auto p = r.cpd("p");
    return surprisal_pdg(p, r.event(p.targets().at(0)), opt);
  }
  if (name == "cross-entropy") return cross_entropy_pdg(r.cpd("p"), r.data("D"), opt);
  if (name == "marginal-nll") {
    auto p = r.cpd("p");
    if (r.has_event()) return marginal_nll_pdg(p, r.event(p.targets().at(0)), opt);
    return marginal_nll_dataset_pdg(p, r.data("D"), opt);
  }
  if (name == "supervised-ce") return supervised_ce_pdg(r.cpd("h"), r.data("D"), opt);
  if (name == "accuracy") {
    Cpd d = r.has_data("D") ? r.data("D").as_cpd() : r.cpd("D");
    return accuracy_pdg(r.cpd("f"), r.cpd("h"), d, r.beta("D"), r.beta("f"), r.beta("h"), opt);
  }
  if (name == "mse") {
    if (!params.f || !params.h) r.missing("f=[...] and h=[...]");
    return mse_pdg(*params.f, *params.h, r.data("D"));
  }
  if (name == "regularized") {
    auto q = r.cpd("q");
    return regularized_pdg(r.cpd("p"), q, r.event(q.targets().at(0)), r.data("D"), r.beta("q").value(), opt);
  }
  if (name == "elbo") {
    auto p = r.cpd("p");
    return elbo_pdg(p, r.cpd("q"), r.event(p.targets().at(0)), opt);
  }
  if (name == "vae-elbo" || name == "beta-elbo") {
    auto prior = r.cpd("prior"), e = r.cpd("e"), d = r.cpd("d");
    double beta = params.beta.value_or(r.beta("prior").value());
    if (!r.has_event() && r.has_data("D")) {
      if (beta != 1.0) r.missing("beta = 1 when given a dataset");
      return vae_elbo_dataset_pdg(prior, e, d, r.data("D"), opt);
    }
    return vae_elbo_pdg(prior, e, d, r.event(d.targets().at(0)), beta, opt);
  }
  if (name == "expected-cost") {
    auto p = r.cpd("p"), c = r.cpd("c");
    std::vector<double> cost;
    for (std::size_t i = 0; i < c.rows(); ++i) cost.push_back(detail::cost_of(c(i, 0)));
    auto bp = r.beta("p");
    if (!bp.is_infinite() && bp.value() != 1.0) r.missing("p with beta=inf (hard) or beta=1 (soft)");
    return expected_cost_pdg(p, cost, !bp.is_infinite(), opt);
  }
  if (name == "scenario") {
    auto lambda = r.cpd("lambda"), sw = r.cpd("switch"), h = r.cpd("h");
    if (lambda.cols() != 2 || sw.rows() != 2) r.missing("a two-valued switch variable");
    auto row = [&](std::size_t k) {
      auto v = sw.row(k);
      return Cpd::unconditional(sw.targets(), std::vector<double>(v.begin(), v.end()));
    };
    double gamma = params.gamma.value_or(1e3);
    auto rep = scenario_losses(row(0), row(1), h, lambda(0, 0), lambda(0, 1), gamma, opt);
    LossReport out = std::move(rep.l1);
    out.name = "scenario";
    out.extras.push_back({"l2", rep.l2.value});
    out.extras.push_back({"l2_approx", rep.l2.approx});
    out.extras.push_back({"l3", rep.l3.value});
    out.extras.push_back({"l3_geometric_mean_gap", rep.l3.gap});
    return out;
  }
  if (name == "supervised-limit") {
    auto l = r.cpd("l");
    auto data = r.data("D");
    auto h = r.cpd("h");
    std::size_t ny = data.variables().at(1).size(), np = h.targets().at(0).size();
    if (l.rows() != ny * np) r.missing("l over (Y, prediction)");
    std::vector<std::vector<double>> loss(ny, std::vector<double>(np));
    for (std::size_t a = 0; a < ny; ++a)
      for (std::size_t b = 0; b < np; ++b) loss[a][b] = detail::cost_of(l(a * np + b, 0));
    return supervised_limit_pdg(data, h, loss, opt);
  }
  throw Error(ErrorCode::UnknownLoss, "unknown loss " + name);
}

} // namespace pdgloss::dsl

#endif // PDGLOSS_DSL_HPP
