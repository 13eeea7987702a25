#pragma once

#include <span>
#include <vector>

#include "dsoftmax/matrix.hpp"
#include "dsoftmax/rng.hpp"

namespace dsoftmax {

// Cosines are clamped to [-kCosineClamp, kCosineClamp] before any arccos so
// margin derivatives stay finite.
inline constexpr double kCosineClamp = 1.0 - 1e-9;

inline double clamp_cosine(double z) {
  if (z > kCosineClamp) return kCosineClamp;
  if (z < -kCosineClamp) return -kCosineClamp;
  return z;
}

double l2_norm(std::span<const double> v);

// Throws std::invalid_argument on zero (or non-finite) norm.
std::vector<double> l2_normalize(std::span<const double> v);

// Row-normalized copy of `in`; optional out-param receives the original row
// norms. Throws naming `what` and the offending row on a zero-norm row.
Matrix l2_normalize_rows(const Matrix& in, const char* what,
                         std::vector<double>* norms = nullptr);

// (i, j) = cosine between features row i and weights row j, clamped to
// [-1, 1]. Inputs are validated finite; zero-norm rows are reported by index.
Matrix cosine_activations(const Matrix& features, const Matrix& weights);

// log(sum exp(v_i)) via max shift; throws on empty input.
double log_sum_exp(std::span<const double> values);

// log(1 + e^x), stable for large |x|.
double softplus(double x);

// 1 / (1 + e^{-x}), stable for large |x|.
double logistic(double x);

// i.i.d. standard normal entries, deterministic for a fixed rng state.
Matrix seeded_gaussian_matrix(std::size_t rows, std::size_t cols, RngState& rng);

}  // namespace dsoftmax
