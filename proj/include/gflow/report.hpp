#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gflow {

struct CheckResult {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

// One named check suite: per-check max residual against its tolerance.
struct VerificationReport {
  std::string subject;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  void add(std::string name, double residual, double tol, std::string detail = {}) {
    checks.push_back({std::move(name), residual, tol, residual <= tol, std::move(detail)});
  }
  void add_flag(std::string name, bool ok, std::string detail = {}) {
    checks.push_back({std::move(name), ok ? 0.0 : 1.0, 0.5, ok, std::move(detail)});
  }
  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  double worst(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c.max_residual;
    return -1.0;
  }
};

}  // namespace gflow
