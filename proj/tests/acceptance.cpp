// Acceptance run: one PASS/FAIL line per criterion, followed by the individual checks.
// Exit status is nonzero when any criterion fails.

#include <cstdio>
#include <iostream>

#include "poincare/reproduce.hpp"

int main() {
  poincare::ReproduceOptions opt;
  int failed = 0;
  std::string details;
  for (int id = 1; id <= 8; ++id) {
    poincare::CriterionResult r;
    if (id == 8) {
      poincare::ComparisonReport tri, sq;
      try {
        r = poincare::criterion_comparison(opt, &tri, &sq);
        details += poincare::criterion_text(r) + poincare::comparison_text(tri) + poincare::comparison_text(sq);
      } catch (const poincare::Error& e) {
        r.id = 8;
        r.error = e.what();
        details += poincare::criterion_text(r);
      }
    } else {
      r = poincare::run_criterion(id, opt);
      details += poincare::criterion_text(r);
    }
    std::printf("criterion %d: %s  %s\n", r.id, r.pass() ? "PASS" : "FAIL", r.title.c_str());
    std::fflush(stdout);
    if (!r.pass()) ++failed;
  }
  std::cout << "\n" << details;
  std::printf("\n%d of 8 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
