#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "nlform/records.hpp"

namespace nlform::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  std::vector<Record> records;
};

struct SuiteResult {
  std::vector<CriterionResult> criteria;
  bool all_pass() const;
};

/// Runs the full desk-scale acceptance suite.  Every tolerance is pinned
/// in code; the final criterion re-runs the stochastic ones with the same
/// seed and demands byte-identical records.
SuiteResult run_acceptance(std::uint64_t seed);

/// One aligned pass/fail line per criterion.
void print_table(const SuiteResult& suite, std::ostream& out);

}  // namespace nlform::verify
