#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "nlform/config.hpp"
#include "nlform/measures.hpp"
#include "nlform/seqspace.hpp"

namespace nlform::cli {

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
};

/// Exit codes per error class.
enum ExitCode {
  kOk = 0,
  kFailure = 1,        // acceptance failures
  kInvalidInput = 2,   // config/usage errors
  kPrecondition = 3,
  kResourceLimit = 4,
  kNumerical = 5,
  kUnsupported = 6,
  kIo = 7,
};

/// Dispatches a parsed config to its command, writes records to the
/// resolved output, prints the human summary to `summary`.
int run(const ExperimentConfig& config, const RunOverrides& overrides, std::ostream& summary);

/// Builders shared with tests: a model or test function described by the
/// config sections.
std::unique_ptr<meas::Measure> build_model(const ExperimentConfig& config);
seq::CylinderFunction build_function(const ExperimentConfig& config);

}  // namespace nlform::cli
