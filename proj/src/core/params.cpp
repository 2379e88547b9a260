#include "cd2cdr/params.hpp"

#include <cmath>
#include <sstream>

#include "cd2cdr/adam.hpp"
#include "cd2cdr/errors.hpp"

namespace cd2cdr {

Grads zeros_like(const ParamList& params) {
  Grads g;
  g.reserve(params.size());
  for (const auto& p : params) g.emplace_back(p.value->rows(), p.value->cols());
  return g;
}

void append(ParamList& dst, const ParamList& src) { dst.insert(dst.end(), src.begin(), src.end()); }

double params_norm(const ParamList& params) {
  double s = 0.0;
  for (const auto& p : params) s += dot(p.value->values(), p.value->values());
  return std::sqrt(s);
}

void quantize_to_f32(const ParamList& params) {
  for (const auto& p : params) {
    for (double& v : p.value->values()) v = static_cast<double>(static_cast<float>(v));
  }
}

std::string norms_summary(const ParamList& params) {
  std::ostringstream os;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) os << ", ";
    os << params[i].name << "=" << frobenius_norm(*params[i].value);
  }
  return os.str();
}

void adam_step(const ParamList& params, const Grads& grads, AdamState& state, double lr) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient count mismatch");
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.value->rows(), p.value->cols());
      state.second_moment.emplace_back(p.value->rows(), p.value->cols());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks a different parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i].value, grads[i], "adam_step gradient");
    require_same_shape(*params[i].value, state.first_moment[i], "adam_step state");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value->values();
    auto g = grads[i].values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace cd2cdr
