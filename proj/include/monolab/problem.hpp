#pragma once

// Problem files: a JSON description of a space, an optional catalog function
// and operator, evaluation points, and solver knobs.  load_problem parses and
// validates; every schema diagnostic names the offending field and the
// violated constraint so fixtures can be repaired without reading source.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "monolab/convex.hpp"
#include "monolab/fitz.hpp"
#include "monolab/space.hpp"

namespace monolab {

// Product-box scan region for grid-backed commands.
struct GridSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  int per_axis = 41;
  bool present = false;
};

// Solver knobs; command-line flags override these, which override defaults.
struct SolverSpec {
  double eps = 0.1;
  double lambda = 1.0;
  double tol = 0.0;  // 0 = per-route default
  std::uint64_t seed = 20240817;
  long long budget = 400000;
  GridSpec grid;
};

struct ProblemFile {
  SpaceSpec space = SpaceSpec(1, 2.0);
  ConvexFnPtr function;                   // null when absent
  std::optional<OperatorRepr> op;         // empty when absent
  std::vector<Point> points;              // primal points (or product rows)
  std::vector<std::vector<double>> raw_points;  // as written, for 2d rows
  std::vector<DualPoint> targets;
  std::optional<Point> point;             // z
  std::optional<DualPoint> dual_point;    // z*
  std::vector<double> eps_schedule;
  SolverSpec solver;
  nlohmann::ordered_json raw;             // verbatim echo for reports
};

// Build a catalog function from a descriptor object {"kind": ..., ...}.
// `path` prefixes schema diagnostics (e.g. "function" or
// "operator.function").  Exposed for tests and for nested descriptors.
ConvexFnPtr function_from_json(const SpaceSpec& s,
                               const nlohmann::ordered_json& j,
                               const std::string& path);

// Parse and validate a problem file.  Throws ParseError when the file is
// unreadable or not JSON, SchemaError when a field violates its constraint.
// Relative CSV paths resolve against the problem file's directory.
ProblemFile load_problem(const std::string& path);

// Same, from an already-parsed document; `base_dir` anchors CSV paths.
ProblemFile problem_from_json(const nlohmann::ordered_json& doc,
                              const std::string& base_dir);

}  // namespace monolab
