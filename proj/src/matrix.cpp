#include "dsoftmax/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dsoftmax/wire.hpp"

namespace dsoftmax {

namespace {
constexpr char kMagic[5] = {'D', 'S', 'F', 'X', '1'};
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows_ * cols_ != data_.size())
    throw std::invalid_argument("Matrix: rows*cols does not match data length");
  require_finite("Matrix");
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Matrix::require_finite(const char* what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s: non-finite entry at (%zu, %zu)", what,
                    cols_ ? i / cols_ : 0, cols_ ? i % cols_ : 0);
      throw std::invalid_argument(buf);
    }
  }
}

void Matrix::save(const std::string& path) const {
  std::string buf;
  buf.reserve(5 + 16 + data_.size() * 8);
  buf.append(kMagic, sizeof(kMagic));
  wire::put_u64(buf, rows_);
  wire::put_u64(buf, cols_);
  for (double v : data_) wire::put_f64(buf, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("Matrix::save: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("Matrix::save: write failed for " + path);
}

Matrix Matrix::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("Matrix::load: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());

  wire::Reader r(buf);
  if (r.remaining() < sizeof(kMagic) ||
      buf.compare(0, sizeof(kMagic), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("Matrix::load: bad magic in " + path);
  r.bytes(sizeof(kMagic));

  std::uint64_t rows, cols;
  std::vector<double> data;
  try {
    rows = r.u64();
    cols = r.u64();
    data.reserve(rows * cols);
    for (std::uint64_t i = 0; i < rows * cols; ++i) data.push_back(r.f64());
  } catch (const wire::ReadError&) {
    throw std::runtime_error("Matrix::load: truncated file " + path);
  }
  if (r.remaining() != 0)
    throw std::runtime_error("Matrix::load: trailing bytes in " + path);
  return Matrix(rows, cols, std::move(data));
}

}  // namespace dsoftmax
