#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cd2cdr {

// Dense row-major matrix of doubles. Vectors are stored as 1 x n matrices.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  static Mat identity(std::size_t n);
  static Mat row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v);
  bool same_shape(const Mat& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  std::string shape_str() const;

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  friend bool operator==(const Mat& a, const Mat& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);

// Shape guard; throws ShapeError with `what` as context.
void require_shape(const Mat& m, std::size_t rows, std::size_t cols, const char* what);
void require_same_shape(const Mat& a, const Mat& b, const char* what);
// Throws NonFiniteError if any entry is NaN or Inf.
void require_finite(const Mat& m, const char* what);
bool all_finite(const Mat& m);

Mat matmul(const Mat& a, const Mat& b);     // a * b
Mat matmul_tn(const Mat& a, const Mat& b);  // a^T * b
Mat matmul_nt(const Mat& a, const Mat& b);  // a * b^T
// c += a * b, c += a^T * b
void matmul_acc(const Mat& a, const Mat& b, Mat& c);
void matmul_tn_acc(const Mat& a, const Mat& b, Mat& c);

Mat transpose(const Mat& a);
Mat hadamard(const Mat& a, const Mat& b);
Mat hstack(std::initializer_list<const Mat*> blocks);
Mat vstack(std::initializer_list<const Mat*> blocks);
Mat slice_cols(const Mat& a, std::size_t begin, std::size_t end);
Mat gather_rows(const Mat& a, std::span<const int> rows);
// out.row(idx[i]) += rows.row(i)
void scatter_add_rows(const Mat& rows, std::span<const int> idx, Mat& out);

Mat column_mean(const Mat& a);
Mat column_sum(const Mat& a);
void add_row_broadcast(Mat& a, const Mat& row);

double dot(std::span<const double> a, std::span<const double> b);
double frobenius_norm(const Mat& a);
double sum(const Mat& a);
double max_abs(const Mat& a);
double mean_row_l2(const Mat& a);
double mean_row_l1(const Mat& a);

}  // namespace cd2cdr
