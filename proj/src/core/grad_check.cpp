#include "cd2cdr/grad_check.hpp"

#include <cmath>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

namespace {
double finite_or_throw(double v, const char* where) {
  if (!std::isfinite(v)) throw NonFiniteError(std::string("grad_check: non-finite loss at ") + where);
  return v;
}
}  // namespace

GradCheckReport grad_check(const LossFn& loss, const ParamList& params, double step, double floor) {
  Grads analytic = zeros_like(params);
  finite_or_throw(loss(&analytic), "base point");
  if (analytic.size() != params.size()) throw ShapeError("grad_check: gradient count mismatch");

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    require_same_shape(*params[p].value, analytic[p], "grad_check gradient");
    auto values = params[p].value->values();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + step;
      const double up = finite_or_throw(loss(nullptr), "positive step");
      values[k] = saved - step;
      const double down = finite_or_throw(loss(nullptr), "negative step");
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][k];
      const double rel = std::abs(a - numeric) / std::max(std::abs(numeric), floor);
      if (rel > report.max_relative_error) {
        report = {rel, params[p].name, k, a, numeric};
      }
    }
  }
  return report;
}

}  // namespace cd2cdr
