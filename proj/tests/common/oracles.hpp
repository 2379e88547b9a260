#pragma once
// Independent reference implementations used only by tests. They share no code with the
// library kernels they check.

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "cd2cdr/mat.hpp"

namespace oracle {

using cd2cdr::Mat;

// Gauss-Jordan elimination with partial pivoting on [A | B]; returns X with A X = B.
inline Mat gauss_solve(Mat a, Mat b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("gauss_solve: shape");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    }
    if (std::abs(a(piv, col)) < 1e-300) throw std::runtime_error("gauss_solve: singular");
    for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
    for (std::size_t c = 0; c < b.cols(); ++c) std::swap(b(col, c), b(piv, c));
    const double inv = 1.0 / a(col, col);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col) * inv;
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) a(r, c) -= f * a(col, c);
      for (std::size_t c = 0; c < b.cols(); ++c) b(r, c) -= f * b(col, c);
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) b(r, c) /= a(r, r);
  }
  return b;
}

// Normal equations (X^T X + alpha I) W = X^T Y assembled entry by entry.
inline Mat ridge_by_elimination(const Mat& x, const Mat& y, double alpha) {
  const std::size_t d = x.cols();
  Mat a(d, d), b(d, y.cols());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = i == j ? alpha : 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, i) * x(r, j);
      a(i, j) = s;
    }
    for (std::size_t j = 0; j < y.cols(); ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, i) * y(r, j);
      b(i, j) = s;
    }
  }
  return gauss_solve(a, b);
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_entry(const Mat& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

// Sum of squared distances of each point to its assigned centroid, by brute force.
inline double kmeans_objective(const Mat& pts, const Mat& centroids, const std::vector<int>& assign) {
  double total = 0.0;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    for (std::size_t c = 0; c < pts.cols(); ++c) {
      const double diff = pts(i, c) - centroids(static_cast<std::size_t>(assign[i]), c);
      total += diff * diff;
    }
  }
  return total;
}

// Index of the nearest centroid (lowest index on ties).
inline int nearest(const Mat& pts, std::size_t i, const Mat& centroids) {
  int best = 0;
  double best_d = INFINITY;
  for (std::size_t j = 0; j < centroids.rows(); ++j) {
    double dsq = 0.0;
    for (std::size_t c = 0; c < pts.cols(); ++c) {
      const double diff = pts(i, c) - centroids(j, c);
      dsq += diff * diff;
    }
    if (dsq < best_d) {
      best_d = dsq;
      best = static_cast<int>(j);
    }
  }
  return best;
}

// Dominant eigenvector of a symmetric PSD matrix by power iteration.
inline std::vector<double> top_eigenvector(const Mat& s, int iters = 2000) {
  const std::size_t n = s.rows();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), w(n);
  for (std::size_t i = 0; i < n; ++i) v[i] += 1e-3 * static_cast<double>(i);
  for (int it = 0; it < iters; ++it) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += s(i, j) * v[j];
      w[i] = acc;
      norm += acc * acc;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  return v;
}

// Covariance (1/n) sum (x - mean)(x - mean)^T of the rows.
inline Mat row_covariance(const Mat& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mu(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) mu[c] += x(i, c) / static_cast<double>(n);
  Mat cov(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov(a, b) += (x(i, a) - mu[a]) * (x(i, b) - mu[b]) / static_cast<double>(n);
  return cov;
}

inline double abs_cosine(const std::vector<double>& a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return std::abs(ab) / std::sqrt(aa * bb);
}

}  // namespace oracle
