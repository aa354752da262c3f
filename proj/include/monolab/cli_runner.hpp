#pragma once

// Command dispatch for the monolab tool.  Each command loads a problem file,
// applies flag overrides, runs the corresponding library operation, and
// produces a machine-readable report with a stable key order (plus a plain
// text rendering).  Exit codes: 0 all checks passed, 1 at least one check
// failed, 2 parse/usage error, 3 schema violation, 4 budget or divergence.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace monolab {

inline constexpr const char* kToolVersion = "1.0.0";

struct CliOptions {
  std::string command;
  std::string problem_path;         // optional for selftest
  std::string out_path;             // empty: write to stdout
  std::string format = "json";      // "json" or "text"
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::optional<double> lambda;
  std::optional<double> tol;
  std::optional<long long> budget;
};

struct CommandOutcome {
  nlohmann::ordered_json report;
  int exit_code = 0;
};

// Runs one command end to end.  Throws ParseError / SchemaError /
// DivergenceError / InputError for conditions that map to exit codes >= 2;
// check failures are reported in-band with exit code 1.
CommandOutcome run_command(const CliOptions& opts);

// Renders a report as an indented key/value listing for --format text.
std::string render_text(const nlohmann::ordered_json& report);

// Writes the report to opts.out_path (or stdout) in the selected format.
void emit_report(const CliOptions& opts, const nlohmann::ordered_json& report);

}  // namespace monolab
