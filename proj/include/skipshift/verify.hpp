#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipshift/config.hpp"

namespace skipshift {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Soft checks are reported but never fail the run.
  bool soft = false;
  std::string measured;
  std::string expected;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool hard_passed() const;
  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// Reference trainable-parameter counts for two output classes, keyed by
/// (encoder depth, prune level).
const std::map<std::pair<int, int>, std::int64_t>& reference_parameter_counts();

/// Static checks (parameter counts with the config's decoder widths, metric
/// unit cases, transform identities, generator determinism) plus soft trend
/// checks when the output directory holds run results.
VerifyReport run_verify(const ExperimentConfig& config);

}  // namespace skipshift
