#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "mfb/errors.hpp"

namespace mfb {

/// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 matrices.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), d_((std::size_t)rows * cols, 0.0) {}
  Mat(int rows, int cols, std::initializer_list<double> vals) : Mat(rows, cols) {
    if (vals.size() != d_.size()) throw ShapeError("Mat: initializer size mismatch");
    std::size_t i = 0;
    for (double v : vals) d_[i++] = v;
  }

  static Mat row(std::initializer_list<double> vals) {
    Mat m(1, (int)vals.size());
    int j = 0;
    for (double v : vals) m(0, j++) = v;
    return m;
  }
  static Mat col(std::initializer_list<double> vals) {
    Mat m((int)vals.size(), 1);
    int i = 0;
    for (double v : vals) m(i++, 0) = v;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  double& operator()(int i, int j) { return d_[(std::size_t)i * cols_ + j]; }
  double operator()(int i, int j) const { return d_[(std::size_t)i * cols_ + j]; }
  double& operator[](std::size_t k) { return d_[k]; }
  double operator[](std::size_t k) const { return d_[k]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  double* row_ptr(int i) { return d_.data() + (std::size_t)i * cols_; }
  const double* row_ptr(int i) const { return d_.data() + (std::size_t)i * cols_; }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  void fill(double v) { std::fill(d_.begin(), d_.end(), v); }
  void resize(int rows, int cols) {
    rows_ = rows;
    cols_ = cols;
    d_.assign((std::size_t)rows * cols, 0.0);
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> d_;
};

}  // namespace mfb
