#pragma once

#include <cstdint>

#include "cd2cdr/params.hpp"

namespace cd2cdr {

struct AdamState {
  std::vector<Mat> first_moment;
  std::vector<Mat> second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update. Moments are allocated on the first call; later calls
/// require the same parameter shapes.
void adam_step(const ParamList& params, const Grads& grads, AdamState& state, double lr);

}  // namespace cd2cdr
