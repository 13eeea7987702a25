#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dsoftmax {

// Dense row-major matrix of 64-bit reals. Entries must stay finite; factory
// paths that ingest external data (snapshots, explicit buffers) validate once.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool all_finite() const;
  // Throws std::invalid_argument naming `what` if any entry is NaN/Inf.
  void require_finite(const char* what) const;

  bool operator==(const Matrix& other) const = default;

  // Binary snapshot: magic "DSFX1", rows u64 LE, cols u64 LE, rows*cols f64 LE.
  void save(const std::string& path) const;
  static Matrix load(const std::string& path);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace dsoftmax
