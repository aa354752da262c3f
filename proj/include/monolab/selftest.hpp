#pragma once

// The built-in acceptance suite: nine numbered end-to-end checks covering
// duality identities, monotonicity, Ekeland certificates, the quantitative
// stationarity bounds, surjectivity, Fitzpatrick identities, the product-
// space route, non-maximality detection, and discretization order.  Every
// check verifies library output against an oracle computed here with
// independent arithmetic.  `selftest` in the CLI and the acceptance test
// binary both run exactly this.

#include <cstdint>
#include <string>
#include <vector>

namespace monolab {

struct CriterionResult {
  int index = 0;          // 1-based criterion number
  std::string name;       // short slug, stable across releases
  bool pass = false;
  std::string detail;     // worst measured values vs bounds, or the failure
};

struct SelftestReport {
  std::vector<CriterionResult> criteria;
  bool all_pass = false;
};

// Runs all criteria (deterministic given the seed).  Never throws for a
// failed check; infrastructure errors propagate.
SelftestReport run_selftest(std::uint64_t seed = 20240817);

}  // namespace monolab
