#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace teleopt::verify {

struct PropertyResult {
  std::string name;
  long count = 0;       // cases checked
  long violations = 0;  // cases outside tolerance
  double worst_margin = 0.0;
  bool pass = false;
  std::string note;  // what the margin measures / observed values
};

struct Options {
  bool quick = false;  // reduced counts for smoke runs
  std::uint64_t seed = 20240811;
};

// Every executable property of the theory, symmetry, tasks and meta modules,
// with counts and worst-case margins.
std::vector<PropertyResult> run_all(const Options& opts);

bool all_pass(const std::vector<PropertyResult>& results);
std::string report_json(const std::vector<PropertyResult>& results);

}  // namespace teleopt::verify
