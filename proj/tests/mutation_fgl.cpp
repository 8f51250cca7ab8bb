// Compiled against library sources with FINLOC_FGL_GRADIENT_SIGN_FLIP
// defined, which flips the sign of the localization-loss gradient. The
// finite-difference probe must notice; if it still reports a pass, the
// checker itself is broken.
#include <cstdio>

#include "finloc/commands.hpp"

int main() {
#ifndef FINLOC_FGL_GRADIENT_SIGN_FLIP
#error "this binary only makes sense with the sign flip compiled in"
#endif
  const finloc::RunConfig cfg;
  const finloc::GradcheckReport report =
      finloc::run_gradient_checks(cfg, 10, 1e-5);

  const bool flip_detected = report.fgl_max_error > 1e-2;
  const bool others_clean = report.ddf_max_error < report.threshold &&
                            report.gate_max_error < report.threshold;

  std::printf("flipped localization gradient: max_rel_err %.3e (%s)\n",
              report.fgl_max_error,
              flip_detected ? "detected" : "MISSED");
  std::printf("untouched gradients: ddf %.3e gate %.3e (%s)\n",
              report.ddf_max_error, report.gate_max_error,
              others_clean ? "clean" : "UNEXPECTEDLY BROKEN");
  return (flip_detected && others_clean) ? 0 : 1;
}
