#include <doctest.h>

#include <cmath>

#include "../common/oracles.hpp"
#include "cd2cdr/adam.hpp"
#include "cd2cdr/errors.hpp"
#include "cd2cdr/grad_check.hpp"
#include "cd2cdr/kmeans.hpp"
#include "cd2cdr/mlp.hpp"
#include "cd2cdr/random.hpp"
#include "cd2cdr/ridge.hpp"

using namespace cd2cdr;

namespace {

DenseLayer layer(Mat w, Activation a) {
  DenseLayer l;
  l.bias = Mat(1, w.cols());
  l.weight = std::move(w);
  l.activation = a;
  return l;
}

}  // namespace

TEST_SUITE("mat") {
  TEST_CASE("products agree with hand arithmetic") {
    const Mat a(2, 3, {1, 2, 3, 4, 5, 6});
    const Mat b(3, 2, {7, 8, 9, 10, 11, 12});
    CHECK(matmul(a, b) == Mat(2, 2, {58, 64, 139, 154}));
    CHECK(matmul_tn(a, a) == matmul(transpose(a), a));
    CHECK(matmul_nt(a, a) == matmul(a, transpose(a)));
    CHECK_THROWS_AS(matmul(a, a), ShapeError);
  }

  TEST_CASE("stacking, slicing and row scatter") {
    const Mat a(1, 2, {1, 2}), b(2, 2, {3, 4, 5, 6}), empty(0, 2);
    const Mat v = vstack({&a, &empty, &b});
    CHECK(v == Mat(3, 2, {1, 2, 3, 4, 5, 6}));
    const Mat h = hstack({&b, &b});
    CHECK(slice_cols(h, 2, 4) == b);
    Mat out(2, 2);
    const std::vector<int> idx{1, 1};
    scatter_add_rows(b, idx, out);
    CHECK(out == Mat(2, 2, {0, 0, 8, 10}));
    CHECK(gather_rows(b, idx) == Mat(2, 2, {5, 6, 5, 6}));
  }

  TEST_CASE("reductions") {
    const Mat a(2, 2, {3, 4, 0, -1});
    CHECK(mean_row_l2(a) == doctest::Approx(3.0));
    CHECK(mean_row_l1(a) == doctest::Approx(4.0));
    CHECK(frobenius_norm(a) == doctest::Approx(std::sqrt(26.0)));
    CHECK(column_mean(a) == Mat(1, 2, {1.5, 1.5}));
    Mat nan(1, 1, {std::nan("")});
    CHECK_THROWS_AS(require_finite(nan, "x"), NonFiniteError);
  }
}

TEST_SUITE("ridge") {
  TEST_CASE("X = I, Y = 2I, alpha = 1 gives W = I") {
    const Mat w = ridge_solve(Mat::identity(2), Mat::identity(2) * 2.0, 1.0);
    CHECK(oracle::max_abs_diff(w, Mat::identity(2)) < 1e-12);
  }

  TEST_CASE("alpha = 0 with invertible X reproduces the targets") {
    const Mat x(3, 3, {2, 1, 0, 1, 3, 1, 0, 1, 4});
    const Mat y(3, 2, {1, 2, 3, 4, 5, 6});
    const Mat w = ridge_solve(x, y, 0.0);
    CHECK(oracle::max_abs_diff(matmul(x, w), y) < 1e-10);
  }

  TEST_CASE("huge alpha shrinks W to zero") {
    Rng rng(3);
    const Mat x = uniform_mat(10, 4, -1, 1, rng), y = uniform_mat(10, 3, -1, 1, rng);
    CHECK(oracle::max_abs_entry(ridge_solve(x, y, 1e12)) < 1e-9);
  }

  TEST_CASE("singular design at alpha = 0 is reported, not solved") {
    const Mat x(3, 2, {1, 1, 2, 2, 3, 3});
    CHECK_THROWS_AS(ridge_solve(x, x, 0.0), SingularDesignError);
    CHECK_THROWS_AS(ridge_solve(x, Mat(2, 2), 1.0), ShapeError);
  }

  TEST_CASE("matches Gaussian elimination and meets the residual bound") {
    Rng rng(11);
    std::uniform_int_distribution<int> dm(1, 20), dd(1, 8);
    for (int t = 0; t < 100; ++t) {
      const auto m = static_cast<std::size_t>(dm(rng)), d = static_cast<std::size_t>(dd(rng));
      const Mat x = gaussian_mat(m, d, 1.0, rng), y = gaussian_mat(m, 1 + t % 3, 1.0, rng);
      const double alpha = 0.01 + 0.5 * (t % 5);
      const Mat w = ridge_solve(x, y, alpha);
      const Mat ref = oracle::ridge_by_elimination(x, y, alpha);
      CHECK(oracle::max_abs_diff(w, ref) / std::max(1.0, oracle::max_abs_entry(ref)) < 1e-8);
      CHECK(ridge_residual(x, y, alpha, w) < 1e-8);
    }
  }
}

TEST_SUITE("kmeans") {
  TEST_CASE("separable duplicates") {
    const Mat pts(4, 2, {0, 0, 0, 0, 10, 10, 10, 10});
    const auto r = kmeans(pts, 2, 100, 1);
    CHECK(r.objective == doctest::Approx(0.0));
    const bool order = r.centroids(0, 0) == 0.0;
    CHECK(r.centroids(order ? 0 : 1, 1) == 0.0);
    CHECK(r.centroids(order ? 1 : 0, 0) == 10.0);
  }

  TEST_CASE("J = 1 gives the column mean") {
    Rng rng(2);
    const Mat pts = gaussian_mat(30, 3, 1.0, rng);
    const auto r = kmeans(pts, 1, 100, 5);
    CHECK(oracle::max_abs_diff(r.centroids, column_mean(pts)) < 1e-12);
  }

  TEST_CASE("objective non-increasing, assignments a fixed point") {
    Rng rng(4);
    const Mat pts = gaussian_mat(50, 4, 1.0, rng);
    const auto r = kmeans(pts, 5, 100, 9);
    CHECK(r.centroids.rows() == 5);
    for (std::size_t t = 1; t < r.objective_history.size(); ++t) {
      CHECK(r.objective_history[t] <= r.objective_history[t - 1] + 1e-12);
    }
    CHECK(r.objective == doctest::Approx(oracle::kmeans_objective(pts, r.centroids, r.assignments)));
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      CHECK(r.assignments[i] >= 0);
      CHECK(r.assignments[i] < 5);
      if (r.converged) CHECK(oracle::nearest(pts, i, r.centroids) == r.assignments[i]);
    }
  }

  TEST_CASE("fewer points than clusters is an error; runs are deterministic") {
    Rng rng(1);
    const Mat pts = gaussian_mat(3, 2, 1.0, rng);
    CHECK_THROWS_AS(kmeans(pts, 4, 10, 1), std::invalid_argument);
    const Mat more = gaussian_mat(40, 2, 1.0, rng);
    CHECK(kmeans(more, 3, 100, 7).centroids == kmeans(more, 3, 100, 7).centroids);
  }
}

TEST_SUITE("mlp") {
  TEST_CASE("identity layer passes input through; zero sigmoid layer outputs 0.5") {
    MlpParams id;
    id.layers.push_back(layer(Mat::identity(3), Activation::kIdentity));
    const Mat x(2, 3, {1, -2, 3, 4, 5, -6});
    CHECK(mlp_forward(id, x) == x);
    MlpParams z;
    z.layers.push_back(layer(Mat(3, 2), Activation::kSigmoid));
    const Mat out = mlp_forward(z, x);
    for (double v : out.values()) CHECK(v == 0.5);
    CHECK_THROWS_AS(mlp_forward(id, Mat(1, 2)), ShapeError);
  }

  TEST_CASE("hand 2-layer relu forward") {
    MlpParams n;
    n.layers.push_back(layer(Mat(2, 2, {1, -1, 2, 1}), Activation::kRelu));
    n.layers.push_back(layer(Mat(2, 1, {3, 1}), Activation::kIdentity));
    n.layers[0].bias = Mat(1, 2, {0.5, 0});
    // x = (1, 1): pre = (1 + 2 + 0.5, -1 + 1) = (3.5, 0) -> relu (3.5, 0) -> 10.5
    CHECK(mlp_forward(n, Mat(1, 2, {1, 1}))[0] == doctest::Approx(10.5));
  }

  TEST_CASE("backward: zero upstream, hand chain rule, finite differences") {
    MlpParams id;
    id.layers.push_back(layer(Mat::identity(2), Activation::kIdentity));
    const Mat x(3, 2, {1, 2, 3, 4, 5, 6});
    const auto zero = mlp_backward(id, x, Mat(3, 2));
    CHECK(oracle::max_abs_entry(zero.weight[0]) == 0.0);
    CHECK(oracle::max_abs_entry(zero.bias[0]) == 0.0);
    // loss = sum of outputs: dW = X^T 1
    const auto g = mlp_backward(id, x, Mat(3, 2, 1.0));
    CHECK(g.weight[0] == Mat(2, 2, {9, 9, 12, 12}));

    Rng rng(8);
    MlpParams net = make_mlp({4, 5, 3, 1}, {Activation::kTanh, Activation::kRelu, Activation::kSigmoid}, 0.7, rng);
    const Mat in = gaussian_mat(6, 4, 1.0, rng);
    auto params = net.params("net");
    const auto rep = grad_check(
        [&](Grads* grads) {
          MlpCache cache;
          const Mat out = mlp_forward(net, in, &cache);
          double loss = 0.0;
          for (double v : out.values()) loss += v * v;
          if (grads) {
            grads->clear();
            append_grads(*grads, mlp_backward(net, cache, out * 2.0));
          }
          return loss;
        },
        params, 1e-6);
    CHECK(rep.max_relative_error < 1e-4);
  }

  TEST_CASE("sigmoid and softplus are stable") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(2.0) == doctest::Approx(0.8807970779778823));
    CHECK(std::isfinite(softplus(1000.0)));
    CHECK(softplus(1000.0) == doctest::Approx(1000.0));
    CHECK(softplus(-1000.0) >= 0.0);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves parameters unchanged") {
    Mat p(2, 2, {1, 2, 3, 4});
    const Mat before = p;
    AdamState s;
    adam_step({{"p", &p}}, {Mat(2, 2)}, s, 0.1);
    CHECK(p == before);
    CHECK(s.step == 1);
  }

  TEST_CASE("first step moves by lr against the gradient sign") {
    Mat p(1, 1, {0.0});
    AdamState s;
    adam_step({{"p", &p}}, {Mat(1, 1, {1.0})}, s, 0.001);
    CHECK(p[0] == doctest::Approx(-0.001).epsilon(1e-6));
  }

  TEST_CASE("two identical steps follow the hand recurrence") {
    Mat p(1, 1, {0.0});
    AdamState s;
    const Grads g{Mat(1, 1, {0.5})};
    adam_step({{"p", &p}}, g, s, 0.01);
    adam_step({{"p", &p}}, g, s, 0.01);
    CHECK(s.step == 2);
    const double m1 = 0.1 * 0.5, m2 = 0.9 * m1 + 0.1 * 0.5;
    const double v1 = 0.001 * 0.25, v2 = 0.999 * v1 + 0.001 * 0.25;
    CHECK(s.first_moment[0][0] == doctest::Approx(m2));
    CHECK(s.second_moment[0][0] == doctest::Approx(v2));
    CHECK_THROWS_AS(adam_step({{"p", &p}}, {Mat(2, 1)}, s, 0.01), ShapeError);
  }
}

TEST_SUITE("grad_check") {
  TEST_CASE("exact on a quadratic, detects a doubled gradient, rejects NaN") {
    Mat p(1, 3, {0.3, -1.2, 2.0});
    ParamList params{{"p", &p}};
    auto quad = [&](double scale) {
      return [&p, scale](Grads* g) {
        double l = 0.0;
        for (double v : p.values()) l += 0.5 * v * v;
        if (g) *g = {p * scale};
        return l;
      };
    };
    CHECK(grad_check(quad(1.0), params, 1e-6).max_relative_error < 1e-8);
    CHECK(grad_check(quad(2.0), params, 1e-6).max_relative_error == doctest::Approx(1.0).epsilon(1e-3));
    CHECK_THROWS_AS(grad_check([](Grads*) { return std::nan(""); }, params, 1e-6), NonFiniteError);
  }
}
