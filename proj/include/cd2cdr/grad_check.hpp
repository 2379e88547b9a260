#pragma once

#include <functional>
#include <string>

#include "cd2cdr/params.hpp"

namespace cd2cdr {

// A scalar loss over the parameters it closes over. When `grads` is non-null the
// function also writes analytic gradients aligned with the ParamList under test.
using LossFn = std::function<double(Grads* grads)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares analytic gradients with central differences of step `step` over every
/// parameter entry. Relative error is |analytic - numeric| / max(|numeric|, floor).
/// Throws NonFiniteError if the loss is not finite at any evaluation point.
GradCheckReport grad_check(const LossFn& loss, const ParamList& params, double step,
                           double floor = 1e-5);

}  // namespace cd2cdr
