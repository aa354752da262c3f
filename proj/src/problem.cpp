#include "monolab/problem.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "monolab/errors.hpp"

namespace monolab {

namespace {

using json = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw SchemaError(field, what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) {
      std::ostringstream msg;
      msg << "unknown key '" << it.key() << "'; allowed keys:";
      for (const char* k : allowed) msg << " " << k;
      fail(path, msg.str());
    }
  }
}

const json& need(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "required field is missing");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  return j.get<double>();
}

long long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  return j.get<long long>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "must be a string");
  return j.get<std::string>();
}

// Bound entries in indicator boxes: a number, null (unbounded), or the
// strings "inf" / "-inf" (JSON itself has no infinity literal).
double as_bound(const json& j, const std::string& path, double unbounded) {
  if (j.is_null()) return unbounded;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    fail(path, "string bounds must be \"inf\" or \"-inf\"");
  }
  return as_number(j, path);
}

std::vector<double> as_vector(const json& j, const std::string& path,
                              std::size_t dim) {
  if (!j.is_array()) fail(path, "must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  if (dim != 0 && out.size() != dim) {
    std::ostringstream msg;
    msg << "has " << out.size() << " entries; expected " << dim
        << " to match space.dim";
    fail(path, msg.str());
  }
  return out;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& path,
                          std::size_t dim) {
  if (!j.is_array() || j.empty()) fail(path, "must be a non-empty array of rows");
  if (j.size() != dim) {
    std::ostringstream msg;
    msg << "has " << j.size() << " rows; expected " << dim
        << " to match space.dim";
    fail(path, msg.str());
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim),
                    static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < dim; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    std::vector<double> row = as_vector(j[r], rp, dim);
    for (std::size_t c = 0; c < dim; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

SpaceSpec parse_space(const json& j) {
  if (!j.is_object()) fail("space", "must be an object {dim, p}");
  check_keys(j, "space", {"dim", "p"});
  const long long dim = as_integer(need(j, "space", "dim"), "space.dim");
  if (dim < 1) fail("space.dim", "must be at least 1");
  const double p = as_number(need(j, "space", "p"), "space.p");
  if (!(p > 1.0) || !(p < kInf) || !std::isfinite(p))
    fail("space.p", "must lie in the open interval (1, inf)");
  return SpaceSpec(static_cast<std::size_t>(dim), p);
}

OperatorRepr parse_operator(const SpaceSpec& s, const json& j,
                            const std::string& base_dir) {
  const std::string path = "operator";
  if (!j.is_object()) fail(path, "must be an object with a \"kind\"");
  const std::string kind = as_string(need(j, path, "kind"), path + ".kind");

  if (kind == "finite_graph") {
    check_keys(j, path, {"kind", "pairs", "csv"});
    const bool has_pairs = j.contains("pairs");
    const bool has_csv = j.contains("csv");
    if (has_pairs == has_csv)
      fail(path, "finite_graph needs exactly one of \"pairs\" or \"csv\"");
    if (has_csv) {
      std::filesystem::path csv(as_string(j["csv"], path + ".csv"));
      if (csv.is_relative() && !base_dir.empty())
        csv = std::filesystem::path(base_dir) / csv;
      return OperatorRepr::finite_graph(graph_from_csv(s, csv.string()));
    }
    const json& rows = j["pairs"];
    if (!rows.is_array() || rows.empty())
      fail(path + ".pairs", "must be a non-empty array of rows");
    std::vector<std::pair<Point, DualPoint>> pairs;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string rp = path + ".pairs[" + std::to_string(r) + "]";
      std::vector<double> row = as_vector(rows[r], rp, 0);
      if (row.size() != 2 * s.dim) {
        std::ostringstream msg;
        msg << "has " << row.size() << " entries; expected 2*dim = "
            << 2 * s.dim;
        fail(rp, msg.str());
      }
      pairs.emplace_back(
          Point(s, std::vector<double>(row.begin(),
                                       row.begin() + static_cast<long>(s.dim))),
          DualPoint(s, std::vector<double>(
                           row.begin() + static_cast<long>(s.dim), row.end())));
    }
    return OperatorRepr::finite_graph(OperatorGraph(s, std::move(pairs)));
  }
  if (kind == "psd_linear") {
    check_keys(j, path, {"kind", "matrix"});
    return OperatorRepr::psd_linear(
        s, as_matrix(need(j, path, "matrix"), path + ".matrix", s.dim));
  }
  if (kind == "subdiff_of") {
    check_keys(j, path, {"kind", "function"});
    return OperatorRepr::subdiff_of(function_from_json(
        s, need(j, path, "function"), path + ".function"));
  }
  fail(path + ".kind",
       "unknown operator kind '" + kind +
           "'; expected finite_graph, psd_linear, or subdiff_of");
}

GridSpec parse_grid(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object {lo, hi, per_axis}");
  check_keys(j, path, {"lo", "hi", "per_axis"});
  GridSpec g;
  g.present = true;
  g.lo = as_vector(need(j, path, "lo"), path + ".lo", 0);
  g.hi = as_vector(need(j, path, "hi"), path + ".hi", 0);
  if (g.lo.size() != g.hi.size())
    fail(path, "lo and hi must have the same length");
  for (std::size_t i = 0; i < g.lo.size(); ++i)
    if (!(g.lo[i] < g.hi[i]))
      fail(path + ".lo[" + std::to_string(i) + "]",
           "must be strictly below the matching hi entry");
  if (j.contains("per_axis")) {
    const long long n = as_integer(j["per_axis"], path + ".per_axis");
    if (n < 2) fail(path + ".per_axis", "must be at least 2");
    g.per_axis = static_cast<int>(n);
  }
  return g;
}

SolverSpec parse_solver(const json& j) {
  const std::string path = "solver";
  if (!j.is_object()) fail(path, "must be an object");
  check_keys(j, path,
             {"eps", "lambda", "tol", "seed", "budget", "grid"});
  SolverSpec s;
  if (j.contains("eps")) {
    s.eps = as_number(j["eps"], path + ".eps");
    if (!(s.eps > 0.0)) fail(path + ".eps", "must be positive");
  }
  if (j.contains("lambda")) {
    s.lambda = as_number(j["lambda"], path + ".lambda");
    if (!(s.lambda > 0.0)) fail(path + ".lambda", "must be positive");
  }
  if (j.contains("tol")) {
    s.tol = as_number(j["tol"], path + ".tol");
    if (s.tol < 0.0) fail(path + ".tol", "must be non-negative");
  }
  if (j.contains("seed")) {
    const long long v = as_integer(j["seed"], path + ".seed");
    if (v < 0) fail(path + ".seed", "must be a non-negative integer");
    s.seed = static_cast<std::uint64_t>(v);
  }
  if (j.contains("budget")) {
    s.budget = as_integer(j["budget"], path + ".budget");
    if (s.budget < 1) fail(path + ".budget", "must be at least 1");
  }
  if (j.contains("grid")) s.grid = parse_grid(j["grid"], path + ".grid");
  return s;
}

}  // namespace

ConvexFnPtr function_from_json(const SpaceSpec& s,
                               const nlohmann::ordered_json& j,
                               const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object with a \"kind\"");
  const std::string kind = as_string(need(j, path, "kind"), path + ".kind");

  if (kind == "abs_sum") {
    check_keys(j, path, {"kind"});
    return make_abs_sum(s);
  }
  if (kind == "pnorm_squared_half") {
    check_keys(j, path, {"kind", "center"});
    if (j.contains("center"))
      return make_shifted_pnorm_squared_half(
          Point(s, as_vector(j["center"], path + ".center", s.dim)));
    return make_pnorm_squared_half(s);
  }
  if (kind == "quadratic") {
    check_keys(j, path, {"kind", "matrix", "linear", "constant", "shift"});
    Eigen::MatrixXd m =
        as_matrix(need(j, path, "matrix"), path + ".matrix", s.dim);
    if (j.contains("shift")) {
      if (j.contains("linear") || j.contains("constant"))
        fail(path, "use either \"shift\" or \"linear\"/\"constant\", not both");
      return make_quadratic(s, m,
                            as_vector(j["shift"], path + ".shift", s.dim));
    }
    std::vector<double> lin(s.dim, 0.0);
    if (j.contains("linear"))
      lin = as_vector(j["linear"], path + ".linear", s.dim);
    double cst = 0.0;
    if (j.contains("constant"))
      cst = as_number(j["constant"], path + ".constant");
    return make_quadratic_general(s, m, std::move(lin), cst);
  }
  if (kind == "indicator_box") {
    check_keys(j, path, {"kind", "lo", "hi"});
    const json& lo_j = need(j, path, "lo");
    const json& hi_j = need(j, path, "hi");
    if (!lo_j.is_array() || lo_j.size() != s.dim)
      fail(path + ".lo", "must be an array of space.dim bounds");
    if (!hi_j.is_array() || hi_j.size() != s.dim)
      fail(path + ".hi", "must be an array of space.dim bounds");
    std::vector<double> lo(s.dim), hi(s.dim);
    for (std::size_t i = 0; i < s.dim; ++i) {
      lo[i] = as_bound(lo_j[i], path + ".lo[" + std::to_string(i) + "]", -kInf);
      hi[i] = as_bound(hi_j[i], path + ".hi[" + std::to_string(i) + "]", kInf);
      if (!(lo[i] <= hi[i]))
        fail(path + ".lo[" + std::to_string(i) + "]",
             "must not exceed the matching hi entry");
    }
    return make_indicator_box(s, std::move(lo), std::move(hi));
  }
  if (kind == "indicator_ball") {
    check_keys(j, path, {"kind", "radius"});
    const double r = as_number(need(j, path, "radius"), path + ".radius");
    if (!(r > 0.0)) fail(path + ".radius", "must be positive");
    return make_indicator_ball(s, r);
  }
  if (kind == "affine") {
    check_keys(j, path, {"kind", "slope", "intercept"});
    double b = 0.0;
    if (j.contains("intercept"))
      b = as_number(j["intercept"], path + ".intercept");
    return make_affine(
        s, as_vector(need(j, path, "slope"), path + ".slope", s.dim), b);
  }
  if (kind == "max_affine") {
    check_keys(j, path, {"kind", "slopes", "intercepts"});
    const json& slopes_j = need(j, path, "slopes");
    if (!slopes_j.is_array() || slopes_j.empty())
      fail(path + ".slopes", "must be a non-empty array of slope rows");
    std::vector<std::vector<double>> slopes;
    for (std::size_t k = 0; k < slopes_j.size(); ++k)
      slopes.push_back(as_vector(
          slopes_j[k], path + ".slopes[" + std::to_string(k) + "]", s.dim));
    std::vector<double> intercepts(slopes.size(), 0.0);
    if (j.contains("intercepts")) {
      intercepts = as_vector(j["intercepts"], path + ".intercepts", 0);
      if (intercepts.size() != slopes.size())
        fail(path + ".intercepts", "must have one entry per slope row");
    }
    return make_max_affine(s, std::move(slopes), std::move(intercepts));
  }
  if (kind == "zero") {
    check_keys(j, path, {"kind"});
    return make_zero(s);
  }
  if (kind == "sum") {
    check_keys(j, path, {"kind", "parts"});
    const json& parts_j = need(j, path, "parts");
    if (!parts_j.is_array() || parts_j.size() < 2)
      fail(path + ".parts", "must be an array of at least two descriptors");
    std::vector<ConvexFnPtr> parts;
    for (std::size_t k = 0; k < parts_j.size(); ++k)
      parts.push_back(function_from_json(
          s, parts_j[k], path + ".parts[" + std::to_string(k) + "]"));
    return make_sum(std::move(parts));
  }
  if (kind == "scaled") {
    check_keys(j, path, {"kind", "factor", "inner"});
    const double t = as_number(need(j, path, "factor"), path + ".factor");
    if (!(t > 0.0)) fail(path + ".factor", "must be positive");
    return make_scaled(t,
                       function_from_json(s, need(j, path, "inner"),
                                          path + ".inner"));
  }
  if (kind == "integral") {
    check_keys(j, path, {"kind", "inner", "inner_dim", "nodes", "horizon"});
    long long inner_dim = 1;
    if (j.contains("inner_dim")) {
      inner_dim = as_integer(j["inner_dim"], path + ".inner_dim");
      if (inner_dim < 1) fail(path + ".inner_dim", "must be at least 1");
    }
    const long long nodes =
        as_integer(need(j, path, "nodes"), path + ".nodes");
    if (nodes < 2) fail(path + ".nodes", "must be at least 2");
    double horizon = 1.0;
    if (j.contains("horizon")) {
      horizon = as_number(j["horizon"], path + ".horizon");
      if (!(horizon > 0.0)) fail(path + ".horizon", "must be positive");
    }
    if (static_cast<std::size_t>(nodes * inner_dim) != s.dim) {
      std::ostringstream msg;
      msg << "nodes * inner_dim = " << nodes * inner_dim
          << " must equal space.dim = " << s.dim;
      fail(path + ".nodes", msg.str());
    }
    SpaceSpec inner_space(static_cast<std::size_t>(inner_dim), s.p);
    return build_integral_functional(
        function_from_json(inner_space, need(j, path, "inner"),
                           path + ".inner"),
        static_cast<int>(nodes), horizon);
  }
  fail(path + ".kind",
       "unknown function kind '" + kind +
           "'; expected one of abs_sum, pnorm_squared_half, quadratic, "
           "indicator_box, indicator_ball, affine, max_affine, zero, sum, "
           "scaled, integral");
}

ProblemFile problem_from_json(const nlohmann::ordered_json& doc,
                              const std::string& base_dir) {
  if (!doc.is_object()) fail("(root)", "problem file must be a JSON object");
  check_keys(doc, "(root)",
             {"space", "function", "operator", "points", "targets", "point",
              "dual_point", "eps_schedule", "solver"});

  ProblemFile p;
  p.raw = doc;
  p.space = parse_space(need(doc, "(root)", "space"));

  if (doc.contains("function"))
    p.function = function_from_json(p.space, doc["function"], "function");
  if (doc.contains("operator"))
    p.op = parse_operator(p.space, doc["operator"], base_dir);

  if (doc.contains("points")) {
    const json& rows = doc["points"];
    if (!rows.is_array()) fail("points", "must be an array of rows");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string rp = "points[" + std::to_string(r) + "]";
      std::vector<double> row = as_vector(rows[r], rp, 0);
      if (row.size() != p.space.dim && row.size() != 2 * p.space.dim) {
        std::ostringstream msg;
        msg << "has " << row.size() << " entries; expected dim = "
            << p.space.dim << " or 2*dim = " << 2 * p.space.dim;
        fail(rp, msg.str());
      }
      p.raw_points.push_back(row);
      if (row.size() == p.space.dim)
        p.points.emplace_back(p.space, std::move(row));
    }
  }
  if (doc.contains("targets")) {
    const json& rows = doc["targets"];
    if (!rows.is_array()) fail("targets", "must be an array of rows");
    for (std::size_t r = 0; r < rows.size(); ++r)
      p.targets.emplace_back(
          p.space, as_vector(rows[r], "targets[" + std::to_string(r) + "]",
                             p.space.dim));
  }
  if (doc.contains("point"))
    p.point = Point(p.space, as_vector(doc["point"], "point", p.space.dim));
  if (doc.contains("dual_point"))
    p.dual_point = DualPoint(
        p.space, as_vector(doc["dual_point"], "dual_point", p.space.dim));
  if (doc.contains("eps_schedule")) {
    p.eps_schedule = as_vector(doc["eps_schedule"], "eps_schedule", 0);
    for (std::size_t i = 0; i < p.eps_schedule.size(); ++i) {
      if (!(p.eps_schedule[i] > 0.0))
        fail("eps_schedule[" + std::to_string(i) + "]", "must be positive");
      if (i > 0 && !(p.eps_schedule[i] < p.eps_schedule[i - 1]))
        fail("eps_schedule", "entries must be strictly decreasing");
    }
  }
  if (doc.contains("solver")) p.solver = parse_solver(doc["solver"]);
  return p;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file: " + path);
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("problem file is not valid JSON: " +
                     std::string(e.what()));
  }
  return problem_from_json(
      doc, std::filesystem::path(path).parent_path().string());
}

}  // namespace monolab
