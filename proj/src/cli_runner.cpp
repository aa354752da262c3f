#include "monolab/cli_runner.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "monolab/convex.hpp"
#include "monolab/ekeland.hpp"
#include "monolab/errors.hpp"
#include "monolab/fitz.hpp"
#include "monolab/problem.hpp"
#include "monolab/resolvent.hpp"
#include "monolab/rng.hpp"
#include "monolab/selftest.hpp"
#include "monolab/tolerances.hpp"

namespace monolab {

namespace {

using ordered_json = nlohmann::ordered_json;

// Effective knobs after flag > file > default resolution.
struct Effective {
  double eps;
  double lambda;
  double tol;
  std::uint64_t seed;
  long long budget;
};

Effective resolve_knobs(const CliOptions& opts, const SolverSpec& s) {
  Effective e{};
  e.eps = opts.eps.value_or(s.eps);
  e.lambda = opts.lambda.value_or(s.lambda);
  e.tol = opts.tol.value_or(s.tol);
  e.seed = opts.seed.value_or(s.seed);
  e.budget = opts.budget.value_or(s.budget);
  if (!(e.eps > 0.0)) throw InputError("eps must be positive");
  if (!(e.lambda > 0.0)) throw InputError("lambda must be positive");
  if (e.tol < 0.0) throw InputError("tol must be non-negative");
  if (e.budget < 1) throw InputError("budget must be at least 1");
  return e;
}

ordered_json arr(const std::vector<double>& v) { return ordered_json(v); }

ordered_json json_solution(const ResolventSolution& sol) {
  ordered_json j;
  j["x"] = arr(sol.x.c);
  j["xs_sel"] = arr(sol.xs_sel.c);
  j["residual"] = sol.residual;
  j["residual_recomputed"] = sol.residual_recomputed;
  j["lambda"] = sol.lambda;
  j["target"] = arr(sol.target.c);
  j["route"] =
      sol.route == SolveRoute::Direct ? "direct" : "product-space";
  if (sol.direct_agreement) j["direct_agreement"] = *sol.direct_agreement;
  j["certified"] = sol.certified;
  j["iterations"] = sol.iterations;
  j["note"] = sol.note;
  return j;
}

ordered_json json_certificate(const EkelandCertificate& cert) {
  ordered_json j;
  j["x_eps"] = arr(cert.x_eps.c);
  j["eps"] = cert.eps;
  j["objective_value"] = cert.objective_value;
  j["inf_reference"] = {
      {"value", cert.inf_reference.value},
      {"provenance", cert.inf_reference.provenance == InfProvenance::ClosedForm
                         ? "closed-form"
                         : "best-found"}};
  j["gap_1a"] = cert.gap_1a;
  ordered_json pc;
  pc["sample_count"] = cert.perturbed_check.plan.count;
  pc["sample_radius"] = cert.perturbed_check.plan.radius;
  pc["sample_seed"] = cert.perturbed_check.plan.seed;
  pc["max_violation"] = cert.perturbed_check.max_violation;
  pc["violations"] = cert.perturbed_check.violations;
  if (cert.perturbed_check.worst_witness)
    pc["worst_witness"] = arr(cert.perturbed_check.worst_witness->c);
  j["perturbed_check"] = pc;
  j["route"] = cert.route;
  j["iterations"] = cert.iterations;
  return j;
}

// Builds a graph for operators given by values: listed pairs verbatim,
// otherwise seeded samples through the operator's selection.
OperatorGraph graph_for_check(const ProblemFile& p, const OperatorRepr& op,
                              std::uint64_t seed) {
  if (op.variant() == OperatorVariant::FiniteGraph) return op.graph();
  std::vector<std::pair<Point, DualPoint>> pairs;
  if (!p.points.empty()) {
    for (const Point& x : p.points)
      if (auto v = op.value_at(x)) pairs.emplace_back(x, *v);
  } else {
    Rng rng(seed ^ 0x6d6f6e6f);
    for (int k = 0; k < 200; ++k) {
      Point x(op.space(), rng.cube(op.space().dim, 3.0));
      if (auto v = op.value_at(x)) pairs.emplace_back(x, *v);
    }
  }
  if (pairs.empty())
    throw InputError(
        "check-monotone: no graph points; supply \"points\" inside the "
        "operator's domain");
  return OperatorGraph(op.space(), std::move(pairs));
}

// --- command handlers -------------------------------------------------------

void cmd_check_monotone(const ProblemFile& p, const Effective& eff,
                        ordered_json& results, bool& pass) {
  if (!p.op) throw InputError("check-monotone requires an \"operator\"");
  OperatorGraph g = graph_for_check(p, *p.op, eff.seed);
  MonotoneCheckResult res = check_monotone(g);
  results["pairs_checked"] = g.pairs.size();
  results["monotone"] = res.monotone;
  if (!res.monotone) {
    ordered_json viol;
    viol["i"] = res.i;
    viol["j"] = res.j;
    viol["pairing"] = res.value;
    viol["point_i"] = {{"x", arr(g.pairs[res.i].first.c)},
                       {"xs", arr(g.pairs[res.i].second.c)}};
    viol["point_j"] = {{"x", arr(g.pairs[res.j].first.c)},
                       {"xs", arr(g.pairs[res.j].second.c)}};
    results["violation"] = viol;
  }
  pass = res.monotone;
}

void cmd_fitzpatrick(const ProblemFile& p, const Effective& eff,
                     ordered_json& results, bool& pass) {
  if (!p.op) throw InputError("fitzpatrick requires an \"operator\"");
  const std::size_t d = p.space.dim;

  std::vector<std::pair<Point, DualPoint>> pts;
  for (const std::vector<double>& row : p.raw_points)
    if (row.size() == 2 * d)
      pts.emplace_back(
          Point(p.space, std::vector<double>(row.begin(),
                                             row.begin() + static_cast<long>(d))),
          DualPoint(p.space, std::vector<double>(
                                 row.begin() + static_cast<long>(d),
                                 row.end())));
  if (pts.empty() && p.op->variant() == OperatorVariant::FiniteGraph)
    pts = p.op->graph().pairs;
  if (pts.empty())
    throw InputError(
        "fitzpatrick requires product-space \"points\" rows (2*dim entries) "
        "or a finite-graph operator");

  FitzOptions options;
  options.seed = eff.seed;
  if (p.solver.grid.present) {
    options.lo_axes = p.solver.grid.lo;
    options.hi_axes = p.solver.grid.hi;
    options.per_axis = p.solver.grid.per_axis;
  }
  FitzTheoremReport rep = fitzpatrick_theorem_check(*p.op, pts, options);

  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const FitzPointVerdict& v = rep.points[i];
    ordered_json row;
    row["x"] = arr(pts[i].first.c);
    row["xs"] = arr(pts[i].second.c);
    row["h_value"] = v.h_value;
    row["pairing_value"] = v.pairing_value;
    row["graph_member"] = v.graph_member;
    row["pairing_equality"] = v.pairing_equality;
    row["witness_ok"] = v.witness_ok;
    row["subdiff_member"] = v.subdiff_member;
    row["consistent"] = v.consistent;
    rows.push_back(row);
  }
  results["points"] = rows;
  results["one_sided"] = rep.one_sided;
  results["all_consistent"] = rep.all_consistent;
  pass = rep.all_consistent;
}

int cmd_ekeland(const ProblemFile& p, const Effective& eff,
                ordered_json& results, bool& pass) {
  if (!p.function) throw InputError("ekeland requires a \"function\"");
  Point start = p.point ? *p.point : p.function->finite_point();
  EvpControls ec;
  ec.budget = static_cast<int>(
      std::min<long long>(eff.budget, std::numeric_limits<int>::max()));
  ec.seed = eff.seed;

  int exit_override = 0;
  EkelandCertificate cert = [&] {
    try {
      return evp_solve(p.function, eff.eps, start, ec);
    } catch (const EvpBudgetError& e) {
      results["budget_exhausted"] = true;
      results["error"] = e.what();
      exit_override = 4;
      return e.best();
    }
  }();

  EvpVerifyReport ver = evp_verify(cert, p.function);
  results["certificate"] = json_certificate(cert);
  ordered_json vj;
  vj["pass_gap"] = ver.pass_gap;
  vj["pass_perturbed"] = ver.pass_perturbed;
  vj["objective_value"] = ver.objective_value;
  vj["gap"] = ver.gap;
  vj["max_violation"] = ver.max_violation;
  vj["points_checked"] = ver.points_checked;
  if (ver.worst_witness) vj["worst_witness"] = arr(ver.worst_witness->c);
  results["verification"] = vj;
  pass = ver.pass() && exit_override == 0;
  return exit_override;
}

void cmd_resolve(const ProblemFile& p, const Effective& eff,
                 ordered_json& results, bool& pass) {
  if (!p.function) throw InputError("resolve requires a \"function\"");
  DualPoint target = [&] {
    if (p.dual_point) return *p.dual_point;
    if (!p.targets.empty()) return p.targets.front();
    throw InputError("resolve requires \"dual_point\" or \"targets\"");
  }();
  Point z = p.point
                ? *p.point
                : Point(p.space, std::vector<double>(p.space.dim, 0.0));
  SolveControls sc;
  sc.budget = static_cast<int>(
      std::min<long long>(eff.budget, std::numeric_limits<int>::max()));
  sc.seed = eff.seed;
  ResolventSolution sol =
      solve_regularized(p.function, eff.lambda, z, target, eff.tol, sc);
  results = json_solution(sol);
  pass = sol.certified;
}

void cmd_maximality(const ProblemFile& p, const Effective& eff,
                    ordered_json& results, bool& pass) {
  if (!p.function) throw InputError("maximality-test requires a \"function\"");
  if (!p.point || !p.dual_point)
    throw InputError(
        "maximality-test requires \"point\" and \"dual_point\" (the pair "
        "under test)");
  std::vector<double> schedule =
      p.eps_schedule.empty() ? std::vector<double>{0.1, 0.01}
                             : p.eps_schedule;
  const double tol = eff.tol > 0.0 ? eff.tol : 1e-6;
  SolveControls sc;
  sc.budget = static_cast<int>(
      std::min<long long>(eff.budget, std::numeric_limits<int>::max()));
  sc.seed = eff.seed;
  MaximalityTestResult res = maximality_extension_test(
      p.function, eff.lambda, *p.point, *p.dual_point, schedule, tol, sc);

  results["related"] = res.related;
  results["gap_estimate"] = res.gap_estimate;
  results["gap_exact"] = res.gap_exact;
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < res.distances.size(); ++i) {
    const double eps = schedule[i];
    ordered_json row;
    row["eps"] = eps;
    row["primal_distance"] = res.distances[i].first;
    row["primal_bound"] = eps + tol;
    row["dual_distance"] = res.distances[i].second;
    row["dual_bound"] = 2.0 * eps / eff.lambda + tol;
    rows.push_back(row);
  }
  results["per_eps"] = rows;
  results["bounds_ok"] = res.bounds_ok;
  pass = res.related && res.bounds_ok;
}

void cmd_minty(const ProblemFile& p, const Effective& eff,
               ordered_json& results, bool& pass) {
  if (!p.op) throw InputError("minty requires an \"operator\"");
  if (p.targets.empty()) throw InputError("minty requires \"targets\"");
  const double tol = eff.tol > 0.0 ? eff.tol : 1e-6;
  SolveControls sc;
  sc.budget = static_cast<int>(
      std::min<long long>(eff.budget, std::numeric_limits<int>::max()));
  sc.seed = eff.seed;
  MintyReport rep = minty_probe(*p.op, eff.lambda, p.targets, tol, sc);

  ordered_json rows = ordered_json::array();
  for (const MintyEntry& e : rep.entries) {
    ordered_json row;
    row["target"] = arr(e.target.c);
    if (e.x) row["x"] = arr(e.x->c);
    if (e.xs_sel) row["xs_sel"] = arr(e.xs_sel->c);
    row["residual"] = e.residual;
    row["certified"] = e.certified;
    row["route"] = e.route;
    rows.push_back(row);
  }
  results["entries"] = rows;
  results["max_residual"] = rep.max_residual;
  results["tol"] = rep.tol;
  results["all_within_tol"] = rep.all_within_tol;
  pass = rep.all_within_tol;
}

void cmd_rockafellar(const ProblemFile& p, const Effective& eff,
                     ordered_json& results, bool& pass) {
  if (!p.op) throw InputError("rockafellar requires an \"operator\"");
  DualPoint zs = [&] {
    if (p.dual_point) return *p.dual_point;
    if (!p.targets.empty()) return p.targets.front();
    throw InputError("rockafellar requires \"dual_point\" or \"targets\"");
  }();
  const double tol = eff.tol > 0.0 ? eff.tol : 1e-8;
  SolveControls sc;
  sc.budget = static_cast<int>(
      std::min<long long>(eff.budget, std::numeric_limits<int>::max()));
  sc.seed = eff.seed;
  ResolventSolution sol = rockafellar_solve(*p.op, eff.lambda, zs, tol, sc);
  results = json_solution(sol);
  pass = sol.certified;
}

void cmd_selftest(const Effective& eff, ordered_json& results, bool& pass) {
  SelftestReport rep = run_selftest(eff.seed);
  ordered_json rows = ordered_json::array();
  for (const CriterionResult& c : rep.criteria) {
    ordered_json row;
    row["index"] = c.index;
    row["name"] = c.name;
    row["pass"] = c.pass;
    row["detail"] = c.detail;
    rows.push_back(row);
  }
  results["criteria"] = rows;
  results["all_pass"] = rep.all_pass;
  pass = rep.all_pass;
}

ordered_json tolerance_echo() {
  ordered_json t;
  t["monotone_pair"] = Tolerances::monotone_pair;
  t["monotonicity"] = Tolerances::monotonicity;
  t["fitz_lower_bound"] = Tolerances::fitz_lower_bound;
  t["fitz_active_tie"] = Tolerances::fitz_active_tie;
  t["resolvent_closed_form"] = Tolerances::resolvent_closed_form;
  t["resolvent_iterative"] = Tolerances::resolvent_iterative;
  t["resolvent_recompute"] = Tolerances::resolvent_recompute;
  return t;
}

}  // namespace

CommandOutcome run_command(const CliOptions& opts) {
  static const std::set<std::string> known = {
      "check-monotone", "fitzpatrick", "ekeland",     "resolve",
      "maximality-test", "minty",      "rockafellar", "selftest"};
  if (!known.count(opts.command))
    throw InputError("unknown command: " + opts.command);

  ProblemFile problem;
  bool have_problem = false;
  if (!opts.problem_path.empty()) {
    problem = load_problem(opts.problem_path);
    have_problem = true;
  } else if (opts.command != "selftest") {
    throw InputError("--problem is required for " + opts.command);
  }
  Effective eff = resolve_knobs(opts, problem.solver);

  ordered_json report;
  report["command"] = opts.command;
  ordered_json inputs;
  inputs["problem"] = have_problem ? problem.raw : ordered_json(nullptr);
  ordered_json overrides = ordered_json::object();
  if (opts.seed) overrides["seed"] = *opts.seed;
  if (opts.eps) overrides["eps"] = *opts.eps;
  if (opts.lambda) overrides["lambda"] = *opts.lambda;
  if (opts.tol) overrides["tol"] = *opts.tol;
  if (opts.budget) overrides["budget"] = *opts.budget;
  inputs["overrides"] = overrides;
  inputs["effective"] = {{"eps", eff.eps},
                         {"lambda", eff.lambda},
                         {"tol", eff.tol},
                         {"seed", eff.seed},
                         {"budget", eff.budget}};
  report["inputs"] = inputs;

  ordered_json results;
  bool pass = false;
  int exit_override = 0;
  if (opts.command == "check-monotone") {
    cmd_check_monotone(problem, eff, results, pass);
  } else if (opts.command == "fitzpatrick") {
    cmd_fitzpatrick(problem, eff, results, pass);
  } else if (opts.command == "ekeland") {
    exit_override = cmd_ekeland(problem, eff, results, pass);
  } else if (opts.command == "resolve") {
    cmd_resolve(problem, eff, results, pass);
  } else if (opts.command == "maximality-test") {
    cmd_maximality(problem, eff, results, pass);
  } else if (opts.command == "minty") {
    cmd_minty(problem, eff, results, pass);
  } else if (opts.command == "rockafellar") {
    cmd_rockafellar(problem, eff, results, pass);
  } else {
    cmd_selftest(eff, results, pass);
  }
  report["results"] = results;

  report["provenance"] = {{"seed", eff.seed},
                          {"version", kToolVersion},
                          {"tolerances", tolerance_echo()}};
  ordered_json summary;
  summary["pass"] = pass;
  ordered_json failures = ordered_json::array();
  if (!pass) failures.push_back(opts.command + " reported a failed check");
  summary["failures"] = failures;
  report["summary"] = summary;

  CommandOutcome out;
  out.report = std::move(report);
  out.exit_code = exit_override != 0 ? exit_override : (pass ? 0 : 1);
  return out;
}

namespace {

void render_value(const ordered_json& v, const std::string& indent,
                  std::ostream& os);

bool scalar_array(const ordered_json& a) {
  for (const auto& v : a)
    if (v.is_object() || v.is_array()) return false;
  return true;
}

void render_value(const ordered_json& v, const std::string& indent,
                  std::ostream& os) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (it.value().is_object() ||
          (it.value().is_array() && !scalar_array(it.value()))) {
        os << indent << it.key() << ":\n";
        render_value(it.value(), indent + "  ", os);
      } else {
        os << indent << it.key() << ": " << it.value().dump() << "\n";
      }
    }
  } else if (v.is_array()) {
    std::size_t i = 0;
    for (const auto& item : v) {
      os << indent << "- [" << i++ << "]\n";
      render_value(item, indent + "  ", os);
    }
  } else {
    os << indent << v.dump() << "\n";
  }
}

}  // namespace

std::string render_text(const ordered_json& report) {
  std::ostringstream os;
  render_value(report, "", os);
  return os.str();
}

void emit_report(const CliOptions& opts, const ordered_json& report) {
  const std::string body =
      opts.format == "text" ? render_text(report) : report.dump(2) + "\n";
  if (opts.out_path.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(opts.out_path);
    if (!out)
      throw InputError("cannot open output path: " + opts.out_path);
    out << body;
  }
}

}  // namespace monolab
