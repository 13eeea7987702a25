#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dsoftmax/core_math.hpp"
#include "dsoftmax/matrix.hpp"

namespace dsoftmax {

enum class LossKind {
  Softmax,
  SphereFace,
  CosFace,
  ArcFace,
  DSoftmax,
  HybridSoftmaxInter,
  HybridArcInter,
};

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// True for losses whose intra and inter terms share one normalizer, i.e.
// everything except DSoftmax. Hybrids compute an entangled forward pass.
bool is_entangled(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::Softmax;
  double s = 32.0;   // activation scale
  double d = 0.9;    // intra termination target; epsilon is derived from it
  int m1 = 4;        // SphereFace angular multiplier
  double m2 = 0.5;   // ArcFace additive angle (radians)
  double m3 = 0.35;  // CosFace cosine margin

  // epsilon = e^{s*d}; kept in log space for the loss math.
  double epsilon() const;
  double log_epsilon() const { return s * d; }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  // Flat key-value text (kind, s, d, m1, m2, m3); epsilon is derived and
  // never serialized.
  std::string serialize() const;
  static LossConfig deserialize(const std::string& text);
};

double epsilon_from_d(double d, double s);

struct ActivationBatch {
  static constexpr std::size_t kNoPositive = std::numeric_limits<std::size_t>::max();

  Matrix z;                                // B x S cosine activations
  std::vector<std::size_t> positive_col;   // per row; kNoPositive when absent

  std::size_t batch_size() const { return z.rows(); }
  std::size_t num_cols() const { return z.cols(); }
  void validate() const;
};

struct LossOutput {
  std::vector<double> row_loss;  // per-row loss
  Matrix dz;                     // per-row gradients d(row_loss_i)/dz[i][j]
  double mean_loss = 0.0;
  // Filled by the dissected and hybrid losses; empty for the plain family.
  std::vector<double> row_intra;
  std::vector<double> row_inter;
};

// psi(z_y) and its derivative for the margin family. z_y is clamped to
// (-1, 1) before any arccos.
struct MarginTransform {
  double psi;
  double dpsi;
};
MarginTransform margin_transform(double z_y, LossKind kind, int m1, double m2,
                                 double m3);

// Entangled family (Softmax, SphereFace, CosFace, ArcFace):
//   row loss = log(1 + sum_{k != y} e^{s z_k} / e^{s psi(z_y)})
// computed in log space. Gradients use p_k = softmax probabilities over
// {s psi(z_y)} u {s z_k}: dz_k = s p_k, dz_y = s (p_y - 1) psi'(z_y).
LossOutput softmax_family_forward_backward(const ActivationBatch& batch,
                                           const LossConfig& cfg);

// Dissected intra term: log(1 + eps e^{-s z_y}), dz_y = -s eps/(eps + e^{s z_y}).
struct IntraResult {
  double loss;
  double dz_y;
};
IntraResult d_softmax_intra(double z_y, const LossConfig& cfg);

// Dissected inter term: log(1 + sum e^{s z_k}); writes per-negative gradients
// into dz_out (same length as z_negs). Empty input yields loss 0.
double d_softmax_inter(std::span<const double> z_negs, const LossConfig& cfg,
                       std::span<double> dz_out);

// Full D-Softmax: intra(z_y) + inter(all other columns); the positive column
// receives only the intra gradient.
LossOutput d_softmax_full(const ActivationBatch& batch, const LossConfig& cfg);

// Entangled forward + dissected backward: the full Softmax/ArcFace loss plus
// the dissected intra value; the gradient keeps the family's negative-column
// entries and carries the dissected intra gradient on the positive column.
LossOutput hybrid_inter_only(const ActivationBatch& batch, const LossConfig& cfg);

// Dispatch on cfg.kind.
LossOutput loss_forward_backward(const ActivationBatch& batch, const LossConfig& cfg);

// Chain rule from activation gradients to raw (unnormalized) features and
// weights. activations must equal cosine_activations(features, weights).
struct ParameterGradients {
  Matrix dx;  // B x n
  Matrix dw;  // S x n
};
ParameterGradients chain_to_parameters(const Matrix& dz, const Matrix& features,
                                       const Matrix& weights,
                                       const Matrix& activations);
ParameterGradients chain_to_parameters(const Matrix& dz, const Matrix& features,
                                       const Matrix& weights);

}  // namespace dsoftmax
