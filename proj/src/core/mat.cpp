#include "cd2cdr/mat.hpp"

#include <algorithm>
#include <cmath>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
    : rows_(rows), cols_(cols), data_(values) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Mat: initializer has " + std::to_string(data_.size()) +
                     " values for shape " + shape_str());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::row_vector(std::span<const double> values) {
  Mat m(1, values.size());
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

void Mat::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Mat::shape_str() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Mat& Mat::operator+=(const Mat& other) {
  require_same_shape(*this, other, "Mat::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  require_same_shape(*this, other, "Mat::operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

void require_shape(const Mat& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected (" + std::to_string(rows) + "x" +
                     std::to_string(cols) + "), got " + m.shape_str());
  }
}

void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

bool all_finite(const Mat& m) {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return std::isfinite(v); });
}

void require_finite(const Mat& m, const char* what) {
  if (!all_finite(m)) throw NonFiniteError(std::string(what) + ": non-finite entries");
}

void matmul_acc(const Mat& a, const Mat& b, Mat& c) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + a.shape_str() + " * " + b.shape_str());
  }
  require_shape(c, a.rows(), b.cols(), "matmul output");
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.data() + i * n;
    const double* arow = a.data() + i * a.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double av = arow[k];
      const double* brow = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_tn_acc(const Mat& a, const Mat& b, Mat& c) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ " + a.shape_str() + " vs " + b.shape_str());
  }
  require_shape(c, a.cols(), b.cols(), "matmul_tn output");
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* arow = a.data() + r * a.cols();
    const double* brow = b.data() + r * n;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double av = arow[i];
      double* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  matmul_acc(a, b, c);
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  Mat c(a.cols(), b.cols());
  matmul_tn_acc(a, b, c);
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column counts differ " + a.shape_str() + " vs " + b.shape_str());
  }
  // Transposing first keeps the inner loop contiguous in both operands.
  Mat c(a.rows(), b.rows());
  matmul_acc(a, transpose(b), c);
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Mat hadamard(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "hadamard");
  Mat c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
  return c;
}

Mat hstack(std::initializer_list<const Mat*> blocks) {
  std::size_t rows = (*blocks.begin())->rows();
  std::size_t cols = 0;
  for (const Mat* b : blocks) {
    if (b->rows() != rows) throw ShapeError("hstack: row counts differ");
    cols += b->cols();
  }
  Mat out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.data() + r * cols;
    for (const Mat* b : blocks) {
      auto src = b->row(r);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

Mat vstack(std::initializer_list<const Mat*> blocks) {
  // Blocks without rows take part only through their column count, and only if every
  // block is empty.
  std::size_t cols = (*blocks.begin())->cols();
  for (const Mat* b : blocks) {
    if (b->rows() > 0) {
      cols = b->cols();
      break;
    }
  }
  std::size_t rows = 0;
  for (const Mat* b : blocks) {
    if (b->rows() == 0) continue;
    if (b->cols() != cols) throw ShapeError("vstack: column counts differ");
    rows += b->rows();
  }
  Mat out(rows, cols);
  double* dst = out.data();
  for (const Mat* b : blocks) dst = std::copy(b->values().begin(), b->values().end(), dst);
  return out;
}

Mat slice_cols(const Mat& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) throw ShapeError("slice_cols: bad range");
  Mat out(a.rows(), end - begin);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = a(r, c);
  return out;
}

Mat gather_rows(const Mat& a, std::span<const int> rows) {
  Mat out(rows.size(), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = a.row(static_cast<std::size_t>(rows[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void scatter_add_rows(const Mat& rows, std::span<const int> idx, Mat& out) {
  if (rows.rows() != idx.size() || rows.cols() != out.cols()) {
    throw ShapeError("scatter_add_rows: shape mismatch");
  }
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = rows.row(i);
    auto dst = out.row(static_cast<std::size_t>(idx[i]));
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
}

Mat column_sum(const Mat& a) {
  Mat s(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) s[c] += a(r, c);
  return s;
}

Mat column_mean(const Mat& a) {
  Mat s = column_sum(a);
  if (a.rows() > 0) s *= 1.0 / static_cast<double>(a.rows());
  return s;
}

void add_row_broadcast(Mat& a, const Mat& row) {
  require_shape(row, 1, a.cols(), "add_row_broadcast");
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) a(r, c) += row[c];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius_norm(const Mat& a) { return std::sqrt(dot(a.values(), a.values())); }

double sum(const Mat& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double max_abs(const Mat& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double mean_row_l2(const Mat& a) {
  if (a.rows() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) s += std::sqrt(dot(a.row(r), a.row(r)));
  return s / static_cast<double>(a.rows());
}

double mean_row_l1(const Mat& a) {
  if (a.rows() == 0) return 0.0;
  double s = 0.0;
  for (double v : a.values()) s += std::abs(v);
  return s / static_cast<double>(a.rows());
}

}  // namespace cd2cdr
