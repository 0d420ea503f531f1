// Runs the acceptance battery and prints one line per criterion.
// Usage: stochfield_acceptance [criterion ids...]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "stochfield/verify/battery.hpp"

int main(int argc, char** argv) {
  stochfield::verify::BatteryOptions opt;
  for (int i = 1; i < argc; ++i) opt.only.push_back(std::atoi(argv[i]));
  int failed = 0;
  stochfield::verify::run_battery(opt, [&](const stochfield::verify::CriterionResult& r) {
    std::printf("%s\n", stochfield::verify::format_result(r).c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  });
  std::printf("%s: %d criteria failed\n", failed ? "FAILED" : "OK", failed);
  return failed ? 1 : 0;
}
