// Verification suites: each check exercises one structural property of the
// model end to end and reports a pass/fail with its worst residual.  The
// acceptance harness runs them at full scale; the CLI `verify` subcommand at
// a configurable scale.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace reflux {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // worst residual or margin, check-specific
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 20250801;
  int lemma1_count = 1000;
  int drain_count = 200;
  int decomposition_count = 100;
  int theorem1_count = 50;
  int theorem1_grid = 2000;
  int theorem1_refine_subset = 6;
  int small_eps_count = 10;
  int one_switch_grid = 5;
  int one_switch_points = 2000;
  int table1_grid = 2000;
  bool table1_horizon_check = false;
  /// Test fixture: evaluates the kernel ordering with a deliberately flipped
  /// sign so the suite must fail (proves the checks can fail).
  bool negative_control = false;
};

CheckResult check_lemma1_ordering(const VerifyOptions& o);
CheckResult check_theorem1_fixed_priority(const VerifyOptions& o);
CheckResult check_sign_flip(const VerifyOptions& o);
CheckResult check_small_eps_coefficient(const VerifyOptions& o);
CheckResult check_large_eps_coefficient(const VerifyOptions& o);
CheckResult check_asymptotics_oracle(const VerifyOptions& o);
CheckResult check_kernel_decomposition(const VerifyOptions& o);
CheckResult check_gap_table(const VerifyOptions& o);
CheckResult check_one_switch(const VerifyOptions& o);
CheckResult check_work_drain(const VerifyOptions& o);

/// All suites in criterion order.
std::vector<CheckResult> run_verification(const VerifyOptions& o);

}  // namespace reflux
