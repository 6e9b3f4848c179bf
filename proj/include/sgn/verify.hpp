#pragma once

#include <functional>
#include <string>
#include <vector>

namespace sgn::verify {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

CheckResult krylov_oracle();           // 1
CheckResult descent_invariant();       // 2
CheckResult estimator_unbiasedness();  // 3
CheckResult bernstein_coverage();      // 4
CheckResult armijo_ledger();           // 5
CheckResult weyl_perturbation();       // 6
CheckResult regularized_bound();       // 7
CheckResult ie_desk_scale();           // 8
CheckResult softmax_desk_scale();      // 9
CheckResult gradient_consistency();    // 10
CheckResult determinism_roundtrip();   // 11

// Informational only: the IE benchmark with quadrature weights, same protocol as check 8.
CheckResult ie_quadrature_variant();

std::vector<CheckResult> run_all(const std::function<void(const CheckResult&)>& on_result = {});
std::string format(const CheckResult& r);

}  // namespace sgn::verify
