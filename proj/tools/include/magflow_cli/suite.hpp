#pragma once

// Invariant suite: the acceptance checks, each reported with its measured
// value and threshold.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "magflow/geometry.hpp"
#include "magflow_cli/output.hpp"

namespace magflow::cli {

struct SuiteRow {
  int criterion = 0;
  std::string check;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct SuiteOptions {
  // Constant-field model for the closed-form checks; kappa = 0.6 if unset.
  std::optional<SurfaceModel> constantModel;
  // Criteria to run (1-9); empty runs all.
  std::vector<int> criteria;
};

std::vector<SuiteRow> runSuite(const SuiteOptions& opt = {},
                               const std::function<void(const SuiteRow&)>& progress = {});

bool allPass(const std::vector<SuiteRow>& rows);
std::string suiteCsv(const std::vector<SuiteRow>& rows);
Json suiteJson(const std::vector<SuiteRow>& rows);
// Fixed-width pass/fail table for terminals.
std::string suiteText(const std::vector<SuiteRow>& rows);

}  // namespace magflow::cli
