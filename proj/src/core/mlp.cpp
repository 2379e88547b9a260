#include "cd2cdr/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation: " + std::string(s));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("MlpParams: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    require_shape(layers[i].bias, 1, layers[i].weight.cols(), "MlpParams bias");
    if (i + 1 < layers.size() && layers[i].weight.cols() != layers[i + 1].weight.rows()) {
      throw ShapeError("MlpParams: layer " + std::to_string(i) + " output " +
                       std::to_string(layers[i].weight.cols()) + " does not feed layer input " +
                       std::to_string(layers[i + 1].weight.rows()));
    }
  }
}

ParamList MlpParams::params(const std::string& prefix) {
  ParamList out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out.push_back({prefix + ".l" + std::to_string(i) + ".weight", &layers[i].weight});
    out.push_back({prefix + ".l" + std::to_string(i) + ".bias", &layers[i].bias});
  }
  return out;
}

MlpParams make_mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                   double stddev, Rng& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) {
    throw std::invalid_argument("make_mlp: need one activation per layer");
  }
  MlpParams net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    net.layers.push_back({gaussian_mat(dims[i], dims[i + 1], stddev, rng), Mat(1, dims[i + 1]), acts[i]});
  }
  return net;
}

namespace {

void apply(Activation a, Mat& m) {
  switch (a) {
    case Activation::kIdentity: return;
    case Activation::kRelu:
      for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::kTanh:
      for (double& v : m.values()) v = std::tanh(v);
      return;
    case Activation::kSigmoid:
      for (double& v : m.values()) v = sigmoid(v);
      return;
  }
}

// grad wrt pre-activation given grad wrt output.
void apply_derivative(Activation a, const Mat& pre, const Mat& out, Mat& grad) {
  switch (a) {
    case Activation::kIdentity: return;
    case Activation::kRelu:
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = pre[i] > 0.0 ? grad[i] : 0.0;
      return;
    case Activation::kTanh:
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= 1.0 - out[i] * out[i];
      return;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= out[i] * (1.0 - out[i]);
      return;
  }
}

}  // namespace

Mat mlp_forward(const MlpParams& net, const Mat& input, MlpCache* cache) {
  net.validate();
  if (input.cols() != net.in_dim()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(input.cols()) +
                     " columns, network expects " + std::to_string(net.in_dim()));
  }
  if (cache) {
    cache->input = input;
    cache->pre.clear();
    cache->out.clear();
  }
  Mat x = input;
  for (const auto& layer : net.layers) {
    Mat z(x.rows(), layer.weight.cols());
    matmul_acc(x, layer.weight, z);
    add_row_broadcast(z, layer.bias);
    Mat y = z;
    apply(layer.activation, y);
    if (cache) {
      cache->pre.push_back(std::move(z));
      cache->out.push_back(y);
    }
    x = std::move(y);
  }
  return x;
}

MlpGrads mlp_backward(const MlpParams& net, const MlpCache& cache, const Mat& upstream) {
  if (cache.out.size() != net.layers.size()) {
    throw ShapeError("mlp_backward: cache does not match network depth");
  }
  require_same_shape(upstream, cache.out.back(), "mlp_backward upstream");
  const std::size_t depth = net.layers.size();
  MlpGrads g;
  g.weight.resize(depth);
  g.bias.resize(depth);
  Mat grad = upstream;
  for (std::size_t li = depth; li-- > 0;) {
    const auto& layer = net.layers[li];
    apply_derivative(layer.activation, cache.pre[li], cache.out[li], grad);
    const Mat& layer_in = li == 0 ? cache.input : cache.out[li - 1];
    g.weight[li] = matmul_tn(layer_in, grad);
    g.bias[li] = column_sum(grad);
    Mat next(grad.rows(), layer.weight.rows());
    for (std::size_t r = 0; r < grad.rows(); ++r) {
      for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
        next(r, i) = dot(grad.row(r), layer.weight.row(i));
      }
    }
    grad = std::move(next);
  }
  g.input = std::move(grad);
  return g;
}

MlpGrads mlp_backward(const MlpParams& net, const Mat& input, const Mat& upstream) {
  MlpCache cache;
  mlp_forward(net, input, &cache);
  return mlp_backward(net, cache, upstream);
}

void append_grads(Grads& dst, MlpGrads&& g) {
  for (std::size_t i = 0; i < g.weight.size(); ++i) {
    dst.push_back(std::move(g.weight[i]));
    dst.push_back(std::move(g.bias[i]));
  }
}

void accumulate_grads(Grads& dst, std::size_t offset, const MlpGrads& g) {
  for (std::size_t i = 0; i < g.weight.size(); ++i) {
    dst[offset + 2 * i] += g.weight[i];
    dst[offset + 2 * i + 1] += g.bias[i];
  }
}

}  // namespace cd2cdr
