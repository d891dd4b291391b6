#include <doctest.h>

#include "npr/verify.hpp"

// The self-check suite backs `npr verify`; the release gate is that a
// fresh build passes every check.
TEST_CASE("verify suite passes on a fresh build") {
  const npr::VerifyReport report = npr::run_verify_suite("verify_scratch_test");
  CHECK(report.results.size() >= 30);
  for (const npr::CheckResult& r : report.results) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.passed);
  }

  const std::string xml = npr::junit_xml(report);
  CHECK(xml.find("<testsuite") != std::string::npos);
  CHECK(xml.find("failures=\"0\"") != std::string::npos);
}
