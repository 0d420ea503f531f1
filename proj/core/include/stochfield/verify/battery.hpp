#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace stochfield::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct BatteryOptions {
  std::uint64_t master_seed = 20240611;
  unsigned workers = 0;
  std::vector<int> only;  // empty: all criteria
};

inline constexpr int kCriterionCount = 11;

CriterionResult run_criterion(int id, const BatteryOptions& options);

std::vector<CriterionResult> run_battery(const BatteryOptions& options,
                                         const std::function<void(const CriterionResult&)>& on_result = {});

/// One line: "[PASS] 7 energy production rate  measured=... threshold=... (12.3 s)  detail".
std::string format_result(const CriterionResult& r);

}  // namespace stochfield::verify
