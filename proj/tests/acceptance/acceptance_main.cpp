#include <cstdio>

#include "sgn/verify.hpp"

int main() {
  int failed = 0;
  sgn::verify::run_all([&](const sgn::verify::CheckResult& r) {
    std::printf("%s\n", sgn::verify::format(r).c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  });
  std::printf("%s\n", sgn::verify::format(sgn::verify::ie_quadrature_variant()).c_str());
  std::printf("%d of 11 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
