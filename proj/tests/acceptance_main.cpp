// Acceptance suite driver: one pass/fail line per criterion, nonzero exit
// on any failure.  The same suite backs the CLI `verify` command.
#include <cstdlib>
#include <iostream>

#include "nlform/verify.hpp"

int main(int argc, char** argv) {
  std::uint64_t seed = 20250809;
  if (argc > 1) seed = std::strtoull(argv[1], nullptr, 10);
  const nlform::verify::SuiteResult suite = nlform::verify::run_acceptance(seed);
  nlform::verify::print_table(suite, std::cout);
  return suite.all_pass() ? 0 : 1;
}
