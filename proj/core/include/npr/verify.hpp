#pragma once

#include <string>
#include <vector>

namespace npr {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // failure reason, empty on success
  double millis = 0.0;
};

struct VerifyReport {
  std::vector<CheckResult> results;

  int failures() const {
    int n = 0;
    for (const CheckResult& r : results) n += r.passed ? 0 : 1;
    return n;
  }
};

/// Runs every reference-oracle and invariant check. Self-contained and
/// deterministic; takes a scratch directory for the I/O checks.
VerifyReport run_verify_suite(const std::string& scratch_dir, int threads = 0);

/// JUnit-style XML rendering of the report.
std::string junit_xml(const VerifyReport& report);

}  // namespace npr
