#pragma once

#include <cstdint>

#include "subseg/model.hpp"

namespace subseg {

struct GradCheckResult {
  double max_rel_err = 0.0;
  size_t checked = 0;      // parameter entries compared
  size_t total_params = 0;
};

// Compares analytic gradients of the full training loss (label-smoothed CE +
// weighted CTC where applicable) against central finite differences
// (h = 1e-5) over >= 200 randomly chosen parameters of a tiny 64-bit model.
GradCheckResult gradient_check(ModelMode mode, uint64_t seed);

}  // namespace subseg
