#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cd2cdr/params.hpp"
#include "cd2cdr/random.hpp"

namespace cd2cdr {

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct DenseLayer {
  Mat weight;  // in x out; y = x W + b
  Mat bias;    // 1 x out
  Activation activation = Activation::kIdentity;
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.front().weight.rows(); }
  std::size_t out_dim() const { return layers.back().weight.cols(); }
  // Throws ShapeError unless consecutive layers chain and biases match.
  void validate() const;
  ParamList params(const std::string& prefix);
};

// dims = {in, h1, ..., out}; weights ~ N(0, stddev), zero biases.
MlpParams make_mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                   double stddev, Rng& rng);

// Per-layer pre-activations and outputs retained for the backward pass.
struct MlpCache {
  Mat input;
  std::vector<Mat> pre;
  std::vector<Mat> out;
};

struct MlpGrads {
  std::vector<Mat> weight;
  std::vector<Mat> bias;
  Mat input;
};

Mat mlp_forward(const MlpParams& net, const Mat& input, MlpCache* cache = nullptr);
MlpGrads mlp_backward(const MlpParams& net, const MlpCache& cache, const Mat& upstream);
// Recomputes the forward pass from `input` before back-propagating.
MlpGrads mlp_backward(const MlpParams& net, const Mat& input, const Mat& upstream);

// Appends weight/bias grads in the same order as MlpParams::params().
void append_grads(Grads& dst, MlpGrads&& g);
void accumulate_grads(Grads& dst, std::size_t offset, const MlpGrads& g);

double sigmoid(double x);
// log(1 + exp(x)) without overflow.
double softplus(double x);

}  // namespace cd2cdr
