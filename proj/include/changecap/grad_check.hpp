#pragma once

#include "changecap/tensor.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace changecap {

struct GradCheckOptions {
  Real step = 1e-6;
  Real tolerance = 1e-5;
  // 0 checks every entry; otherwise a seeded sample of this many entries per
  // parameter (large models are checked on a random subset).
  Index max_entries_per_param = 0;
  std::uint64_t sample_seed = 1;
};

struct GradCheckReport {
  bool pass = false;
  Real worst = 0.0;
  std::string worst_param;
  std::map<std::string, Real> max_rel_error;

  std::string summary() const;
};

// Compares analytic gradients of build() against central finite differences
// over the given parameters. `build` must reconstruct the scalar loss from the
// parameters' current values and be deterministic; determinism is verified up
// front and a violation aborts the check.
//
// Relative error per entry: |a - n| / (|a| + |n| + 1e-12).
GradCheckReport grad_check(const std::function<Tensor()>& build, const std::vector<Tensor>& params,
                           const GradCheckOptions& opts = {});

}  // namespace changecap
