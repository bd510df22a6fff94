#ifndef PDGLOSS_CLI_HPP
#define PDGLOSS_CLI_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <pdgloss/closed_form.hpp>
#include <pdgloss/dsl.hpp>
#include <pdgloss/factor_graph.hpp>
#include <pdgloss/loss_zoo.hpp>
#include <pdgloss/solver.hpp>

namespace pdgloss::cli {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kSchema = "pdgloss.report/1";

enum Exit : int { kOk = 0, kParse = 1, kNotConverged = 2, kUnsupported = 3, kFailure = 4 };

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string digest(std::string_view data) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Non-finite values have no JSON number form.
inline Json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline std::string fixed(double v, int prec = 8) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

struct Report {
  std::string command;
  Json inputs = Json::object();
  Json results = Json::object();
  std::optional<Json> solver;
  std::vector<std::string> text;
  int status = kOk;

  void value(const std::string& name, double nats) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-28s %16.10f nats %16.10f bits", name.c_str(), nats + 0.0, nats / kLn2 + 0.0);
    text.push_back(buf);
  }
  void plain(const std::string& name, double v) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-28s %16.10g", name.c_str(), v + 0.0);
    text.push_back(buf);
  }
  void note(const std::string& s) { text.push_back("  " + s); }
};

inline Json solver_json(const SolveResult& r) {
  return Json{{"iterations", r.iterations}, {"restarts", r.restarts_used}, {"converged", r.converged}};
}

inline std::string solver_line(const SolveResult& r) {
  return "solver: iterations=" + std::to_string(r.iterations) + " restarts=" + std::to_string(r.restarts_used) +
         " converged=" + (r.converged ? "yes" : "no");
}

struct SolverFlags {
  std::uint64_t seed = 0;
  double tol = SolveOptions{}.tol;
  std::optional<std::size_t> restarts;
  std::size_t max_iter = SolveOptions{}.max_iter;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  SolveOptions options() const {
    SolveOptions o;
    o.seed = seed;
    o.tol = tol;
    o.restarts = restarts;
    o.max_iter = max_iter;
    o.threads = threads;
    return o;
  }
  Json json() const {
    Json j{{"seed", seed}, {"tol", tol}};
    if (restarts) j["restarts"] = *restarts;
    j["max_iter"] = max_iter;
    return j;
  }
};

// ---- commands ----------------------------------------------------------------

inline Json marginals_json(const JointTable& mu) {
  Json out = Json::object();
  for (const auto& v : mu.variables()) {
    auto m = marginal(mu, VariableList{v});
    Json row = Json::object();
    for (std::size_t i = 0; i < v.size(); ++i) row[v.labels[i]] = num(m[i]);
    out[v.name] = row;
  }
  return out;
}

inline Report inconsistency_report(const Pdg& pdg, double gamma, const SolverFlags& flags, bool show_argmin) {
  Report r;
  r.command = "inconsistency";
  auto res = min_gamma_score(pdg, gamma, flags.options());
  r.results["gamma"] = gamma;
  r.results["inconsistency"] = num(res.inconsistency.nats);
  r.value("inconsistency (gamma=" + dsl::detail::fmt_number(gamma) + ")", res.inconsistency.nats);
  if (show_argmin) {
    r.results["argmin_marginals"] = marginals_json(res.argmin);
    for (const auto& v : res.argmin.variables()) {
      auto m = marginal(res.argmin, VariableList{v});
      std::string line = "argmin " + v.name + ":";
      for (std::size_t i = 0; i < v.size(); ++i) line += " " + v.labels[i] + "=" + fixed(m[i], 6);
      r.note(line);
    }
  }
  r.solver = solver_json(res);
  r.note(solver_line(res));
  if (!res.converged) r.status = kNotConverged;
  return r;
}

enum class DivergenceMode { Confidences, Renyi, Chernoff };

struct DivergenceArgs {
  std::vector<double> p, q;
  DivergenceMode mode = DivergenceMode::Confidences;
  double r = 1.0, s = 1.0, alpha = 0.5;
  bool verify = false;
};

inline Report divergence_report(const DivergenceArgs& a, const SolverFlags& flags) {
  Report rep;
  rep.command = "divergence";
  std::vector<double> lp(a.p), lq(a.q);
  double r = a.r, s = a.s;
  double value = 0.0;
  switch (a.mode) {
    case DivergenceMode::Confidences:
      value = pdg_divergence(lp, lq, r, s);
      rep.results["r"] = r;
      rep.results["s"] = s;
      rep.results["pdg_divergence"] = num(value);
      rep.value("D^PDG_(r,s)", value);
      break;
    case DivergenceMode::Renyi: {
      value = renyi_divergence(lp, lq, a.alpha);
      rep.results["alpha"] = a.alpha;
      rep.results["renyi"] = num(value);
      rep.value("D_alpha", value);
      if (a.alpha < 1.0) {
        auto c = alpha_to_confidences(a.alpha);
        r = c.r;
        s = c.s;
        double pd = pdg_divergence(lp, lq, r, s);
        rep.results["pdg_divergence"] = num(pd);
        rep.results["identity_residual"] = num(std::abs(pd - s * value));
        rep.value("D^PDG_(alpha/(1-alpha),1)", pd);
      }
      break;
    }
    case DivergenceMode::Chernoff: {
      auto c = chernoff_divergence(lp, lq);
      value = c.value;
      r = c.beta_star;
      s = 1.0 - c.beta_star;
      rep.results["chernoff"] = num(value);
      rep.results["beta_star"] = c.beta_star;
      rep.value("Chernoff", value);
      rep.note("beta* = " + fixed(c.beta_star, 8));
      break;
    }
  }
  if (a.verify && (a.mode != DivergenceMode::Renyi || a.alpha < 1.0)) {
    Variable x = Variable::indexed("X", lp.size());
    auto g = build_pdg({x}, {{"p", Cpd::unconditional(x, lp), Confidence(r)}, {"q", Cpd::unconditional(x, lq), Confidence(s)}});
    auto res = min_gamma_score(g, 0.0, flags.options());
    double closed = pdg_divergence(lp, lq, r, s);
    rep.results["solver_value"] = num(res.inconsistency.nats);
    rep.results["solver_gap"] = num(std::abs(res.inconsistency.nats - closed));
    rep.value("solver cross-check", res.inconsistency.nats);
    rep.solver = solver_json(res);
    rep.note(solver_line(res));
    if (!res.converged) rep.status = kNotConverged;
  }
  return rep;
}

inline Report loss_report(const std::string& name, const dsl::Document& doc, const dsl::LossParams& params,
                          const SolverFlags& flags) {
  Report rep;
  rep.command = "loss";
  auto r = dsl::evaluate_loss(name, doc, params, flags.options());
  rep.results["loss"] = r.name;
  rep.results["direct"] = num(r.direct.nats);
  rep.results["inconsistency"] = num(r.inconsistency.nats);
  rep.results["correction"] = num(r.correction.nats);
  rep.results["discrepancy"] = num(r.discrepancy);
  rep.results["tolerance"] = r.tolerance;
  rep.results["ok"] = r.ok();
  Json extras = Json::object();
  for (const auto& [k, v] : r.extras) extras[k] = num(v);
  rep.results["extras"] = extras;
  rep.note("loss " + r.name);
  rep.value("direct", r.direct.nats);
  rep.value("inconsistency", r.inconsistency.nats);
  rep.value("correction", r.correction.nats);
  for (const auto& [k, v] : r.extras) rep.plain(k, v);
  rep.note("discrepancy " + dsl::detail::fmt_number(r.discrepancy) + (r.ok() ? " (ok)" : " (exceeds tolerance)"));
  if (r.solve) {
    rep.solver = solver_json(*r.solve);
    rep.note(solver_line(*r.solve));
    if (!r.solve->converged) rep.status = kNotConverged;
  }
  return rep;
}

/// Factor graph JSON: {variables: [{name, domain}], factors: [{scope, values, theta, name?}]}.
/// A domain is a list of labels or a size.
inline WeightedFactorGraph factor_graph_from_json(const std::string& text) {
  Json j = Json::parse(text);
  VariableList vars;
  for (const auto& v : j.at("variables")) {
    auto name = v.at("name").get<std::string>();
    const auto& d = v.at("domain");
    if (d.is_number_unsigned()) vars.push_back(Variable::indexed(name, d.get<std::size_t>()));
    else vars.emplace_back(name, d.get<std::vector<std::string>>());
  }
  std::vector<Factor> factors;
  for (const auto& f : j.at("factors")) {
    Factor fac;
    fac.name = f.value("name", std::string());
    for (const auto& n : f.at("scope")) {
      auto s = n.get<std::string>();
      auto it = std::find_if(vars.begin(), vars.end(), [&](const Variable& v) { return v.name == s; });
      if (it == vars.end()) throw Error(ErrorCode::UnknownVariable, "factor scope uses undeclared " + s);
      fac.scope.push_back(*it);
    }
    fac.values = f.at("values").get<std::vector<double>>();
    fac.theta = f.value("theta", 1.0);
    factors.push_back(std::move(fac));
  }
  return WeightedFactorGraph(std::move(vars), std::move(factors));
}

inline Report fg_report(const WeightedFactorGraph& fg, bool check, const SolverFlags& flags) {
  Report rep;
  rep.command = "fg";
  auto z = partition_function(fg);
  rep.results["z"] = num(z.z);
  rep.results["log_z"] = num(z.log_z);
  rep.note("Z = " + dsl::detail::fmt_number(z.z));
  rep.value("log Z", z.log_z);
  if (check) {
    auto f = free_energy_identity(fg, flags.options());
    rep.results["inconsistency"] = num(f.inconsistency);
    rep.results["neg_log_z"] = num(f.neg_log_z);
    rep.results["normalization_offset"] = num(f.normalization_offset);
    rep.results["residual"] = num(f.residual);
    rep.results["gibbs_tv"] = num(f.gibbs_tv);
    rep.value("inconsistency (gamma=1)", f.inconsistency);
    rep.value("-log Z", f.neg_log_z);
    rep.value("sum theta log sum phi", f.normalization_offset);
    rep.note("residual " + dsl::detail::fmt_number(f.residual) + ", Gibbs TV " + dsl::detail::fmt_number(f.gibbs_tv));
    rep.solver = solver_json(f.solve);
    rep.note(solver_line(f.solve));
    if (!f.solve.converged) rep.status = kNotConverged;
  }
  return rep;
}

// ---- check-all --------------------------------------------------------------

struct Check {
  std::string file;
  std::string query;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline bool near(double got, double want, double tol) {
  if (std::isinf(want)) return got == want;
  return std::abs(got - want) <= tol;
}

inline std::string describe_query(const dsl::QueryDecl& q) {
  std::string s = q.kind;
  for (const auto& a : q.args) s += " " + a;
  return s;
}

inline std::vector<double> unconditional_table(const dsl::Document& doc, const std::string& name) {
  auto* c = doc.find_cpd(name);
  if (!c || !c->sources.empty()) throw Error(ErrorCode::SemanticError, "divergence needs an unconditional cpd " + name);
  return dsl::cpd(*c, doc).table();
}

inline Check run_query(const dsl::Document& doc, const dsl::QueryDecl& q, const SolverFlags& flags) {
  Check c;
  c.query = describe_query(q);
  double tol = q.number("tol").value_or(1e-5);
  auto expect = q.number("expect");
  auto compare = [&](double got) {
    c.detail = "value " + dsl::detail::fmt_number(got);
    if (expect && !near(got, *expect, tol)) {
      c.pass = false;
      c.detail += ", expected " + dsl::detail::fmt_number(*expect);
    }
  };
  if (q.kind == "inconsistency") {
    auto r = min_gamma_score(dsl::to_pdg(doc), q.number("gamma").value_or(0.0), flags.options());
    c.pass = r.converged;
    compare(r.inconsistency.nats);
    if (!r.converged) c.detail += ", not converged";
  } else if (q.kind == "loss") {
    if (q.args.size() != 1) throw Error(ErrorCode::SemanticError, "query loss takes one loss name");
    dsl::LossParams params{q.number("beta"), q.number("gamma"), q.list("f"), q.list("h")};
    auto r = dsl::evaluate_loss(q.args[0], doc, params, flags.options());
    c.pass = r.ok();
    if (r.pdg && !dsl::equivalent(*r.pdg, dsl::to_pdg(doc))) {
      c.pass = false;
      c.detail = "model differs from the constructor's graph; ";
    }
    c.detail += "direct " + dsl::detail::fmt_number(r.direct.nats) + ", discrepancy " +
                dsl::detail::fmt_number(r.discrepancy);
    if (expect && !near(r.direct.nats, *expect, tol)) {
      c.pass = false;
      c.detail += ", expected " + dsl::detail::fmt_number(*expect);
    }
  } else if (q.kind == "divergence") {
    DivergenceArgs a;
    a.p = unconditional_table(doc, "p");
    a.q = unconditional_table(doc, "q");
    a.verify = true;
    if (q.number("chernoff").value_or(0.0) != 0.0) a.mode = DivergenceMode::Chernoff;
    else if (auto al = q.number("alpha")) a.mode = DivergenceMode::Renyi, a.alpha = *al;
    else a.r = q.number("r").value_or(1.0), a.s = q.number("s").value_or(1.0);
    auto rep = divergence_report(a, flags);
    double v = rep.results.contains("pdg_divergence") ? rep.results["pdg_divergence"].get<double>()
                                                      : rep.results["chernoff"].get<double>();
    if (a.mode == DivergenceMode::Renyi) v = rep.results["renyi"].get<double>();
    double gap = rep.results.value("solver_gap", 0.0);
    c.pass = rep.status == kOk && gap <= 1e-5;
    compare(v);
    c.detail += ", solver gap " + dsl::detail::fmt_number(gap);
  } else if (q.kind == "fg") {
    auto fg = dsl::to_factor_graph(doc);
    auto f = free_energy_identity(fg, flags.options());
    c.pass = f.residual <= 1e-5 && f.gibbs_tv <= 1e-4 && f.solve.converged;
    c.detail = "residual " + dsl::detail::fmt_number(f.residual) + ", Gibbs TV " + dsl::detail::fmt_number(f.gibbs_tv);
    if (auto z = q.number("expect_z"); z && !near(partition_function(fg).z, *z, 1e-9)) {
      c.pass = false;
      c.detail += ", Z " + dsl::detail::fmt_number(partition_function(fg).z);
    }
  } else {
    c.detail = "unknown query kind";
  }
  return c;
}

} // namespace detail

inline Report check_all_report(const fs::path& dir, const SolverFlags& flags) {
  Report rep;
  rep.command = "check-all";
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".pdg" || e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::InvalidArgument, "no model files in " + dir.string());

  std::vector<Check> checks;
  std::string all;
  for (const auto& f : files) {
    auto text = read_text(f);
    all += f.filename().string() + '\0' + text;
    auto add = [&](Check c) {
      c.file = f.filename().string();
      checks.push_back(std::move(c));
    };
    try {
      if (f.extension() == ".json") {
        auto fg = factor_graph_from_json(text);
        auto fe = free_energy_identity(fg, flags.options());
        add({"", "fg", fe.residual <= 1e-5 && fe.gibbs_tv <= 1e-4,
             "residual " + dsl::detail::fmt_number(fe.residual) + ", Gibbs TV " + dsl::detail::fmt_number(fe.gibbs_tv)});
        continue;
      }
      auto doc = dsl::parse(text);
      auto again = dsl::parse(dsl::serialize(doc));
      add({"", "round-trip", dsl::serialize(again) == dsl::serialize(doc), ""});
      for (const auto& q : doc.queries) {
        try {
          add(detail::run_query(doc, q, flags));
        } catch (const std::exception& e) {
          add({"", detail::describe_query(q), false, e.what()});
        }
      }
    } catch (const std::exception& e) {
      add({"", "parse", false, e.what()});
    }
  }
  rep.inputs["directory"] = dir.filename().string();
  rep.inputs["files"] = files.size();
  rep.inputs["digest"] = digest(all);
  Json list = Json::array();
  std::size_t passed = 0;
  for (const auto& c : checks) {
    passed += c.pass;
    list.push_back(Json{{"file", c.file}, {"query", c.query}, {"pass", c.pass}, {"detail", c.detail}});
    rep.text.push_back(std::string(c.pass ? "PASS " : "FAIL ") + c.file + ": " + c.query +
                       (c.detail.empty() ? "" : " (" + c.detail + ")"));
  }
  rep.results["checks"] = list;
  rep.results["passed"] = passed;
  rep.results["failed"] = checks.size() - passed;
  rep.text.push_back(std::to_string(passed) + "/" + std::to_string(checks.size()) + " checks passed");
  if (passed != checks.size()) rep.status = kFailure;
  return rep;
}

// ---- entry point -------------------------------------------------------------

inline void emit(const Report& r, bool json, double seconds, std::ostream& out) {
  if (json) {
    Json j;
    j["schema"] = kSchema;
    j["command"] = r.command;
    j["inputs"] = r.inputs;
    j["units"] = "nats";
    j["results"] = r.results;
    if (r.solver) j["solver"] = *r.solver;
    j["status"] = r.status;
    j["wall_time_s"] = seconds;
    out << j.dump(2) << "\n";
    return;
  }
  out << r.command << "\n";
  for (const auto& line : r.text) out << line << "\n";
}

inline int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::SyntaxError:
    case ErrorCode::SemanticError:
    case ErrorCode::DuplicateName: return kParse;
    case ErrorCode::UnsupportedHardStructure: return kUnsupported;
    default: return kFailure;
  }
}

inline dsl::Document load_document(const std::string& path, Json& inputs) {
  auto text = read_text(path);
  inputs["file"] = fs::path(path).filename().string();
  inputs["digest"] = digest(text);
  return dsl::parse(text);
}

/// Runs the command line `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pdgloss: losses as inconsistencies of probabilistic dependency graphs"};
  app.require_subcommand(1);
  SolverFlags flags;
  bool json = false;
  auto solver_options = [&](CLI::App* c) {
    c->add_option("--seed", flags.seed, "base seed for random restarts");
    c->add_option("--tol", flags.tol, "relative convergence tolerance");
    c->add_option("--restarts", flags.restarts, "number of solver starts");
    c->add_option("--max-iter", flags.max_iter, "iteration cap per start")->check(CLI::PositiveNumber);
    c->add_option("--threads", flags.threads, "worker threads for restarts")->check(CLI::PositiveNumber);
    c->add_flag("--json", json, "print a pdgloss.report/1 JSON object");
  };

  std::string file, loss_name, dir = "models";
  double gamma = 0.0;
  bool gamma_given = false, show_argmin = false, check_fe = false;

  auto* inc = app.add_subcommand("inconsistency", "minimum gamma-score of a model file");
  inc->add_option("file", file, "model file")->required();
  inc->add_option("--gamma", gamma, "weight of the information deficiency")->check(CLI::NonNegativeNumber);
  inc->add_flag("--show-argmin", show_argmin, "print marginals of the minimizer");
  solver_options(inc);

  DivergenceArgs div;
  bool chernoff = false;
  std::optional<double> alpha, r, s;
  auto* dv = app.add_subcommand("divergence", "PDG divergence of two distributions");
  dv->add_option("--p", div.p, "first distribution, comma separated")->required()->delimiter(',');
  dv->add_option("--q", div.q, "second distribution, comma separated")->required()->delimiter(',');
  auto* ro = dv->add_option("--r", r, "confidence in p");
  auto* so = dv->add_option("--s", s, "confidence in q");
  auto* ao = dv->add_option("--alpha", alpha, "Renyi order");
  auto* co = dv->add_flag("--chernoff", chernoff, "Chernoff information and its optimal beta");
  ao->excludes(ro)->excludes(so)->excludes(co);
  co->excludes(ro)->excludes(so);
  dv->add_flag("--verify", div.verify, "cross-check with the solver");
  solver_options(dv);

  dsl::LossParams lp;
  auto* ls = app.add_subcommand("loss", "evaluate a loss and its inconsistency form");
  ls->set_help_flag("--help", "print this help message and exit");
  ls->add_option("name", loss_name, "loss name")->required();
  ls->add_option("file", file, "model file")->required();
  ls->add_option("--beta", lp.beta, "prior confidence for the ELBO family");
  ls->add_option("--gamma", lp.gamma, "gamma for the scenario losses");
  ls->add_option("--f", lp.f, "mse: label means")->delimiter(',');
  ls->add_option("--h", lp.h, "mse: predictor means")->delimiter(',');
  solver_options(ls);

  auto* fgc = app.add_subcommand("fg", "partition function of a factor graph (.pdg or .json)");
  fgc->add_option("file", file, "model file")->required();
  fgc->add_flag("--check-free-energy", check_fe, "compare with the gamma = 1 inconsistency");
  solver_options(fgc);

  auto* ca = app.add_subcommand("check-all", "run every query in a directory of models");
  ca->add_option("dir", dir, "model directory")->check(CLI::ExistingDirectory);
  solver_options(ca);

  std::vector<const char*> argv{"pdgloss"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  gamma_given = inc->count("--gamma") > 0;

  auto start = std::chrono::steady_clock::now();
  try {
    Report rep;
    Json inputs = Json::object();
    if (*inc) {
      auto doc = load_document(file, inputs);
      if (!gamma_given)
        for (const auto& q : doc.queries)
          if (q.kind == "inconsistency" && q.number("gamma")) {
            gamma = *q.number("gamma");
            break;
          }
      rep = inconsistency_report(dsl::to_pdg(doc), gamma, flags, show_argmin);
    } else if (*dv) {
      if (alpha) div.mode = DivergenceMode::Renyi, div.alpha = *alpha;
      if (chernoff) div.mode = DivergenceMode::Chernoff;
      div.r = r.value_or(1.0);
      div.s = s.value_or(1.0);
      std::string key;
      for (double v : div.p) key += dsl::detail::fmt_number(v) + ",";
      key += "|";
      for (double v : div.q) key += dsl::detail::fmt_number(v) + ",";
      inputs["digest"] = digest(key);
      rep = divergence_report(div, flags);
    } else if (*ls) {
      auto doc = load_document(file, inputs);
      for (const auto& q : doc.queries)
        if (q.kind == "loss" && q.args.size() == 1 && q.args[0] == loss_name) {
          if (!lp.f) lp.f = q.list("f");
          if (!lp.h) lp.h = q.list("h");
          if (!lp.gamma) lp.gamma = q.number("gamma");
        }
      rep = loss_report(loss_name, doc, lp, flags);
    } else if (*fgc) {
      std::string text = read_text(file);
      inputs["file"] = fs::path(file).filename().string();
      inputs["digest"] = digest(text);
      auto fg = fs::path(file).extension() == ".json" ? factor_graph_from_json(text) : dsl::to_factor_graph(dsl::parse(text));
      rep = fg_report(fg, check_fe, flags);
    } else if (*ca) {
      rep = check_all_report(dir, flags);
    }
    Json solver_inputs = flags.json();
    for (auto& [k, v] : rep.inputs.items()) inputs[k] = v;
    for (auto& [k, v] : solver_inputs.items()) inputs[k] = v;
    rep.inputs = inputs;
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit(rep, json, secs, out);
    return rep.status;
  } catch (const dsl::ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const nlohmann::json::exception& e) {
    err << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

} // namespace pdgloss::cli

#endif // PDGLOSS_CLI_HPP
