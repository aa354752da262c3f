// monolab: checks and solvers for monotone operators in l_p spaces.
//
// Usage: monolab <command> [--problem file.json] [flags]
// Commands: check-monotone, fitzpatrick, ekeland, resolve, maximality-test,
//           minty, rockafellar, selftest.
// Exit codes: 0 all checks passed, 1 a check failed, 2 parse/usage error,
//             3 schema violation, 4 budget exhausted or divergence detected.

#include <cstdint>
#include <exception>
#include <iostream>

#include "CLI11.hpp"

#include "monolab/cli_runner.hpp"
#include "monolab/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"checks and solvers for monotone operators in l_p spaces"};
  app.require_subcommand(1);

  monolab::CliOptions opts;
  std::uint64_t seed = 0;
  double eps = 0.0, lambda = 0.0, tol = 0.0;
  long long budget = 0;

  const char* names[] = {"check-monotone", "fitzpatrick", "ekeland",
                         "resolve",        "maximality-test", "minty",
                         "rockafellar",    "selftest"};
  const char* blurbs[] = {
      "check a sampled or listed operator graph for monotonicity",
      "verify the envelope characterization at the given points",
      "produce and verify an approximate-minimizer certificate",
      "solve the regularized inclusion for one target",
      "test monotone relatedness and the quantitative distance bounds",
      "probe surjectivity of the shifted operator over targets",
      "solve through the product-space envelope route",
      "run the built-in acceptance suite"};
  for (std::size_t i = 0; i < 8; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--problem", opts.problem_path,
                    "problem file (JSON)");
    sub->add_option("--out", opts.out_path,
                    "report path (default: stdout)");
    sub->add_option("--seed", seed, "random seed override");
    sub->add_option("--eps", eps, "accuracy parameter override");
    sub->add_option("--lambda", lambda, "regularization weight override");
    sub->add_option("--tol", tol, "residual tolerance override");
    sub->add_option("--budget", budget, "iteration budget override");
    sub->add_option("--format", opts.format, "report format: json or text")
        ->check(CLI::IsMember({"json", "text"}));
    sub->callback([&opts, sub, i, &names, &seed, &eps, &lambda, &tol,
                   &budget] {
      opts.command = names[i];
      if (sub->count("--seed")) opts.seed = seed;
      if (sub->count("--eps")) opts.eps = eps;
      if (sub->count("--lambda")) opts.lambda = lambda;
      if (sub->count("--tol")) opts.tol = tol;
      if (sub->count("--budget")) opts.budget = budget;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    // CLI11's own codes are local detail; keep the documented contract.
    return rc == 0 ? 0 : 2;
  }

  try {
    monolab::CommandOutcome outcome = monolab::run_command(opts);
    monolab::emit_report(opts, outcome.report);
    return outcome.exit_code;
  } catch (const monolab::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const monolab::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const monolab::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const monolab::BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const monolab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
