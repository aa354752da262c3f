#include "monolab/cli_runner.hpp"

#include "monolab/convex.hpp"
#include "monolab/errors.hpp"
#include "monolab/problem.hpp"

#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef MONOLAB_TOOL_PATH
#error "MONOLAB_TOOL_PATH must point at the built command line tool"
#endif
#ifndef MONOLAB_FIXTURES_DIR
#error "MONOLAB_FIXTURES_DIR must point at the fixture directory"
#endif

using namespace monolab;
using nlohmann::ordered_json;

namespace {

std::string fixture(const std::string& name) {
  return std::string(MONOLAB_FIXTURES_DIR) + "/" + name;
}

// Runs the tool through the shell and returns its exit code.
int run_tool(const std::string& args) {
  const std::string cmd =
      std::string(MONOLAB_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(static_cast<unsigned>(status));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CliOptions options(const std::string& command, const std::string& problem) {
  CliOptions o;
  o.command = command;
  o.problem_path = problem;
  return o;
}

}  // namespace

TEST_CASE("a minimal problem file loads with its defaults intact") {
  const ProblemFile p = load_problem(fixture("minimal.json"));
  CHECK(p.space.dim == 1);
  CHECK(p.space.p == 2.0);
  REQUIRE(p.function != nullptr);
  CHECK(p.function->kind() == FnKind::AbsSum);
  CHECK(p.solver.lambda == 1.0);
  CHECK(p.solver.eps == 0.1);
}

TEST_CASE("an exponent outside (1, inf) is a schema violation naming the "
          "field") {
  try {
    load_problem(fixture("bad_p.json"));
    FAIL("expected a schema violation");
  } catch (const SchemaError& e) {
    CHECK(e.field() == "space.p");
    CHECK(e.constraint().find("(1, inf)") != std::string::npos);
  }
}

TEST_CASE("a CSV row with the wrong arity is a schema violation with a "
          "dimension diagnostic") {
  try {
    load_problem(fixture("bad_csv.json"));
    FAIL("expected a schema violation");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("2*dim") != std::string::npos);
  }
}

TEST_CASE("unreadable and syntactically broken files are parse errors") {
  CHECK_THROWS_AS(load_problem(fixture("no_such_file.json")), ParseError);
  CHECK_THROWS_AS(load_problem(fixture("not_json.json")), ParseError);
}

TEST_CASE("unknown keys and unknown kinds are schema violations") {
  const ordered_json doc = {{"space", {{"dim", 1}, {"p", 2.0}}},
                            {"bogus", 1}};
  CHECK_THROWS_AS(problem_from_json(doc, "."), SchemaError);

  const SpaceSpec s(1, 2.0);
  const ordered_json fn = {{"kind", "no_such_function"}};
  try {
    function_from_json(s, fn, "function");
    FAIL("expected a schema violation");
  } catch (const SchemaError& e) {
    CHECK(e.field() == "function.kind");
    CHECK(e.constraint().find("abs_sum") != std::string::npos);
  }
}

TEST_CASE("epsilon schedules in problem files must decrease") {
  const ordered_json doc = {{"space", {{"dim", 1}, {"p", 2.0}}},
                            {"function", {{"kind", "abs_sum"}}},
                            {"eps_schedule", {0.1, 0.2}}};
  CHECK_THROWS_AS(problem_from_json(doc, "."), SchemaError);
}

TEST_CASE("nested function descriptors compose") {
  const ordered_json doc = {
      {"space", {{"dim", 2}, {"p", 2.0}}},
      {"function",
       {{"kind", "sum"},
        {"parts",
         {{{"kind", "abs_sum"}},
          {{"kind", "scaled"},
           {"factor", 2.0},
           {"inner", {{"kind", "pnorm_squared_half"}}}}}}}}};
  const ProblemFile p = problem_from_json(doc, ".");
  REQUIRE(p.function != nullptr);
  CHECK(p.function->kind() == FnKind::Sum);
  // (|.|_1 + 2 * 0.5|.|^2) at (1, -1): 2 + 2 = 4.
  CHECK(p.function->eval(Point(p.space, {1, -1})).value() ==
        doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("a monotonicity violation is reported in band with exit code 1") {
  const CommandOutcome out = run_command(
      options("check-monotone", fixture("monotone_violation.json")));
  CHECK(out.exit_code == 1);
  CHECK(out.report["results"]["monotone"] == false);
  CHECK(out.report["summary"]["pass"] == false);
  const auto& violation = out.report["results"]["violation"];
  CHECK(violation["pairing"].get<double>() == doctest::Approx(-1.0));
  CHECK(violation["i"] == 0);
  CHECK(violation["j"] == 1);
  CHECK(violation["point_i"]["xs"][0] == 1.0);
  CHECK(violation["point_j"]["x"][0] == 1.0);
}

TEST_CASE("the resolve command reports the soft-threshold solution") {
  const CommandOutcome out =
      run_command(options("resolve", fixture("soft_threshold.json")));
  CHECK(out.exit_code == 0);
  CHECK(out.report["command"] == "resolve");
  const auto& sol = out.report["results"];
  CHECK(sol["certified"] == true);
  CHECK(sol["x"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(out.report["summary"]["pass"] == true);
  // Provenance pins the seed and the tolerances that were in force.
  CHECK(out.report["provenance"]["seed"].is_number());
  CHECK(out.report["provenance"]["tolerances"].contains("resolvent_iterative"));
}

TEST_CASE("flag overrides beat problem-file knobs and are echoed") {
  CliOptions o = options("resolve", fixture("soft_threshold.json"));
  o.lambda = 0.5;
  const CommandOutcome out = run_command(o);
  CHECK(out.exit_code == 0);
  CHECK(out.report["inputs"]["effective"]["lambda"] == 0.5);
  CHECK(out.report["inputs"]["overrides"].contains("lambda"));
  // Soft threshold with lambda = 0.5: x = 2 - 0.5 = 1.5.
  CHECK(out.report["results"]["x"][0].get<double>() ==
        doctest::Approx(1.5).epsilon(1e-8));
}

TEST_CASE("invalid override values are input errors") {
  CliOptions o = options("resolve", fixture("soft_threshold.json"));
  o.lambda = -1.0;
  CHECK_THROWS_AS(run_command(o), InputError);
}

TEST_CASE("the theorem checker flags a non-maximal graph with exit code 1") {
  const CommandOutcome out =
      run_command(options("fitzpatrick", fixture("fitz_graph.json")));
  CHECK(out.exit_code == 1);
  CHECK(out.report["results"]["all_consistent"] == false);
  // The strictly-between point (1, 0) is the inconsistent row.
  bool found = false;
  for (const auto& row : out.report["results"]["points"]) {
    if (row["x"][0] == 1.0 && row["xs"][0] == 0.0) {
      found = true;
      CHECK(row["consistent"] == false);
      CHECK(row["pairing_equality"] == true);
      CHECK(row["graph_member"] == false);
    }
  }
  CHECK(found);
}

TEST_CASE("the maximality, minty, and rockafellar commands pass on their "
          "fixtures") {
  CHECK(run_command(options("maximality-test", fixture("maximality_quad.json")))
            .exit_code == 0);
  CHECK(run_command(options("minty", fixture("minty_abs.json"))).exit_code ==
        0);
  CHECK(
      run_command(options("rockafellar", fixture("rock_identity.json")))
          .exit_code == 0);
}

TEST_CASE("ekeland reports a certificate that verifies") {
  CliOptions o = options("ekeland", fixture("minimal.json"));
  o.eps = 0.05;
  const CommandOutcome out = run_command(o);
  CHECK(out.exit_code == 0);
  const auto& cert = out.report["results"]["certificate"];
  CHECK(cert["eps"] == 0.05);
  CHECK(out.report["results"]["verification"]["pass_gap"] == true);
  CHECK(out.report["results"]["verification"]["pass_perturbed"] == true);
}

TEST_CASE("unknown commands are input errors") {
  CHECK_THROWS_AS(run_command(options("frobnicate", fixture("minimal.json"))),
                  InputError);
}

TEST_CASE("the executable honors the documented exit code contract") {
  // 0: checks pass.
  CHECK(run_tool("resolve --problem " + fixture("soft_threshold.json")) == 0);
  // 1: a check failed; the report still renders.
  CHECK(run_tool("check-monotone --problem " +
                 fixture("monotone_violation.json")) == 1);
  // 2: unusable invocations and unparsable files.
  CHECK(run_tool("") == 2);
  CHECK(run_tool("no-such-command") == 2);
  CHECK(run_tool("resolve") == 2);  // missing --problem
  CHECK(run_tool("resolve --problem " + fixture("not_json.json")) == 2);
  CHECK(run_tool("resolve --problem " + fixture("missing.json")) == 2);
  // 3: schema violations.
  CHECK(run_tool("resolve --problem " + fixture("bad_p.json")) == 3);
  CHECK(run_tool("fitzpatrick --problem " + fixture("bad_csv.json")) == 3);
  // 4: divergence and exhausted budgets.
  CHECK(run_tool("ekeland --problem " + fixture("divergent.json")) == 4);
}

TEST_CASE("reports are byte-identical across reruns") {
  const std::string out1 = "determinism_1.json";
  const std::string out2 = "determinism_2.json";
  const std::string args = "resolve --problem " +
                           fixture("soft_threshold.json") + " --seed 99 --out ";
  REQUIRE(run_tool(args + out1) == 0);
  REQUIRE(run_tool(args + out2) == 0);
  CHECK(slurp(out1) == slurp(out2));
  CHECK(slurp(out1).find("\"seed\": 99") != std::string::npos);
  std::remove(out1.c_str());
  std::remove(out2.c_str());
}

TEST_CASE("the text format renders the same report as prose") {
  const std::string out = "render_text.txt";
  REQUIRE(run_tool("resolve --problem " + fixture("soft_threshold.json") +
                   " --format text --out " + out) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("command: \"resolve\"") != std::string::npos);
  CHECK(text.find("summary:") != std::string::npos);
  CHECK(text.find('{') == std::string::npos);  // no JSON punctuation
  std::remove(out.c_str());
}

TEST_CASE("the built-in selftest passes end to end through the executable") {
  CHECK(run_tool("selftest") == 0);
}
