#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcv/matrix_core.hpp"

namespace pcv {

struct InvariantCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // worst observed value of the checked quantity
  double limit = 0.0;  // the value it must not exceed
  std::size_t cases = 0;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  bool passed = true;
  std::vector<InvariantCheck> checks;
};

struct SuiteOptions {
  std::uint64_t seed = 0;
  // Multiplies the default instance counts (at least one instance each).
  double scale = 1.0;
};

// Seeded property batteries: "equivalence", "optimality", "bounds", "fps".
// Throws InvalidArgument on an unknown name.
VerifyReport run_suite(const std::string& name, const SuiteOptions& opts = {});

std::vector<std::string> suite_names();

// Checks a stored factor against the matrix it claims to approximate: every
// row solves its local system, D(i,i) equals the weighted distance to S_i,
// and D is nonnegative.
VerifyReport verify_factor(const EntryOracle& a, const VecchiaFactor& f,
                           double tol = 1e-8);

}  // namespace pcv
