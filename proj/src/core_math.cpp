#include "dsoftmax/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dsoftmax {

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> l2_normalize(std::span<const double> v) {
  double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::invalid_argument("l2_normalize: zero-norm or non-finite vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

Matrix l2_normalize_rows(const Matrix& in, const char* what,
                         std::vector<double>* norms) {
  in.require_finite(what);
  Matrix out(in.rows(), in.cols());
  if (norms) norms->assign(in.rows(), 0.0);
  for (std::size_t i = 0; i < in.rows(); ++i) {
    double n = l2_norm(in.row(i));
    if (!(n > 0.0)) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s: zero-norm row %zu", what, i);
      throw std::invalid_argument(buf);
    }
    if (norms) (*norms)[i] = n;
    auto dst = out.row(i);
    auto src = in.row(i);
    for (std::size_t j = 0; j < in.cols(); ++j) dst[j] = src[j] / n;
  }
  return out;
}

Matrix cosine_activations(const Matrix& features, const Matrix& weights) {
  if (features.cols() != weights.cols())
    throw std::invalid_argument("cosine_activations: dimension mismatch");
  if (features.cols() == 0)
    throw std::invalid_argument("cosine_activations: empty dimension");
  Matrix xn = l2_normalize_rows(features, "cosine_activations(features)");
  Matrix wn = l2_normalize_rows(weights, "cosine_activations(weights)");

  const std::size_t b = features.rows(), s = weights.rows(), n = features.cols();
  Matrix z(b, s);
  for (std::size_t i = 0; i < b; ++i) {
    const double* x = xn.row(i).data();
    for (std::size_t j = 0; j < s; ++j) {
      const double* w = wn.row(j).data();
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += x[k] * w[k];
      z.at(i, j) = std::clamp(dot, -1.0, 1.0);
    }
  }
  return z;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = values[0];
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) {
    // All -inf collapses to -inf; NaN/+inf surfaces as-is.
    return m;
  }
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix seeded_gaussian_matrix(std::size_t rows, std::size_t cols, RngState& rng) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("seeded_gaussian_matrix: empty shape");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = rng.next_gaussian();
  return m;
}

}  // namespace dsoftmax
