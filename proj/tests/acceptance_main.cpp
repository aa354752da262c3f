// Acceptance driver: runs the built-in end-to-end suite (the same nine
// criteria behind `monolab selftest`) and prints one verdict line per
// criterion.  Exits 0 only when every criterion passes.

#include "monolab/selftest.hpp"

#include <cstdio>

int main() {
  const monolab::SelftestReport report = monolab::run_selftest();
  for (const auto& c : report.criteria) {
    std::printf("[%s] criterion %d (%s): %s\n", c.pass ? "PASS" : "FAIL",
                c.index, c.name.c_str(), c.detail.c_str());
  }
  std::printf("%s\n",
              report.all_pass ? "all criteria passed" : "criteria FAILED");
  return report.all_pass ? 0 : 1;
}
