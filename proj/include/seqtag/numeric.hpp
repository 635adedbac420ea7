#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace seqtag {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. One row of an emission matrix is one
/// token's label scores.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v);
  std::string shape_string() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Adds `bias` (1 x cols) to every row.
void add_row_bias(Matrix& m, const Matrix& bias);
/// dst += scale * src, shapes must agree.
void axpy(double scale, const Matrix& src, Matrix& dst);
Matrix hconcat(const Matrix& left, const Matrix& right);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

double log_sum_exp(std::span<const double> v);
double sigmoid(double x);

/// Central-difference gradient of a scalar function of a matrix.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                        double eps);

/// SplitMix64 step; used to derive independent seeds from (seed, counters).
std::uint64_t mix_seed(std::uint64_t x);
/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
template <class Engine>
double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace seqtag
