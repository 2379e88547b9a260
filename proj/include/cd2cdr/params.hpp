#pragma once

#include <string>
#include <vector>

#include "cd2cdr/mat.hpp"

namespace cd2cdr {

// Non-owning handle to one trainable matrix. Models expose their parameters as an
// ordered ParamList; gradients travel as a std::vector<Mat> aligned with that list.
struct NamedParam {
  std::string name;
  Mat* value = nullptr;
};

using ParamList = std::vector<NamedParam>;
using Grads = std::vector<Mat>;

// Zero gradients shaped like `params`.
Grads zeros_like(const ParamList& params);
void append(ParamList& dst, const ParamList& src);
double params_norm(const ParamList& params);
// Rounds every entry to the nearest 32-bit float (checkpoint precision).
void quantize_to_f32(const ParamList& params);
std::string norms_summary(const ParamList& params);

}  // namespace cd2cdr
