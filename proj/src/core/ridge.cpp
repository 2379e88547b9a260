#include "cd2cdr/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

Mat cholesky(const Mat& spd) {
  if (spd.rows() != spd.cols()) throw ShapeError("cholesky: matrix not square " + spd.shape_str());
  const std::size_t n = spd.rows();
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(spd(i, i)));
  // Pivots below this are treated as rank deficiency rather than rounding noise.
  const double tol = scale * static_cast<double>(n) * std::numeric_limits<double>::epsilon();

  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > tol)) {
      throw SingularDesignError("singular design: normal matrix not positive definite at pivot " +
                                std::to_string(j));
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

Mat cholesky_solve(const Mat& lower, const Mat& rhs) {
  const std::size_t n = lower.rows();
  require_shape(rhs, n, rhs.cols(), "cholesky_solve rhs");
  Mat x = rhs;
  const std::size_t m = rhs.cols();
  // forward: L z = b
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) {
      double v = x(i, c);
      for (std::size_t k = 0; k < i; ++k) v -= lower(i, k) * x(k, c);
      x(i, c) = v / lower(i, i);
    }
  }
  // backward: L^T w = z
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t c = 0; c < m; ++c) {
      double v = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) v -= lower(k, ii) * x(k, c);
      x(ii, c) = v / lower(ii, ii);
    }
  }
  return x;
}

namespace {

Mat normal_matrix(const Mat& x, double alpha) {
  Mat g = matmul_tn(x, x);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += alpha;
  return g;
}

}  // namespace

Mat ridge_solve(const Mat& x, const Mat& y, double alpha) {
  if (x.rows() != y.rows()) {
    throw ShapeError("ridge_solve: X " + x.shape_str() + " and Y " + y.shape_str() +
                     " have different row counts");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("ridge_solve: alpha must be a finite nonnegative number");
  }
  require_finite(x, "ridge_solve X");
  require_finite(y, "ridge_solve Y");
  const Mat g = normal_matrix(x, alpha);
  const Mat rhs = matmul_tn(x, y);
  Mat w = cholesky_solve(cholesky(g), rhs);
  require_finite(w, "ridge_solve result");
  return w;
}

double ridge_residual(const Mat& x, const Mat& y, double alpha, const Mat& w) {
  const Mat rhs = matmul_tn(x, y);
  Mat r = matmul(normal_matrix(x, alpha), w);
  r -= rhs;
  return frobenius_norm(r) / std::max(1.0, frobenius_norm(rhs));
}

}  // namespace cd2cdr
