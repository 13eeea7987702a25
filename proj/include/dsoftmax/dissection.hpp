#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsoftmax/losses.hpp"
#include "dsoftmax/matrix.hpp"
#include "dsoftmax/rng.hpp"

namespace dsoftmax {

// Which quantity a curve varies: intra curves sweep the positive activation
// z_y with the negative mass M fixed; inter curves sweep one negative
// activation z_n with z_y and the remaining mass M_n fixed.
enum class CurveFamily { Intra, Inter };

const char* to_string(CurveFamily family);

struct CurveTrace {
  std::vector<double> x;  // strictly increasing activation grid
  std::vector<double> y;  // loss (or gradient) at each grid point
  LossKind kind = LossKind::Softmax;
  CurveFamily family = CurveFamily::Intra;
  double s = 32.0;
  double fixed_mass = 0.0;  // M for intra curves, M_n for inter curves
  double fixed_zy = 0.0;    // inter curves only

  std::string to_csv() const;
};

struct SimilarityStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::uint64_t pair_count = 0;
  // 200 uniform bins over [-1, 1]; counts sum to pair_count.
  static constexpr std::size_t kNumBins = 200;
  std::vector<std::uint64_t> bin_counts;

  double bin_lo(std::size_t b) const { return -1.0 + 2.0 * b / kNumBins; }
  double bin_hi(std::size_t b) const { return -1.0 + 2.0 * (b + 1) / kNumBins; }
  std::string to_csv() const;
};

// d = log(M) / s, the activation where the piecewise-linear branches of the
// fixed-M Softmax intra curve intersect.
double intra_termination_point(double M, double s);

// d' = log(e^{s z_y} + M_n) / s, computed in log space.
double inter_termination_point(double z_y, double M_n, double s);

// Loss value of the fixed-mass curves at one grid point.
double intra_curve_value(LossKind kind, const LossConfig& cfg, double M, double z_y);
double inter_curve_value(LossKind kind, const LossConfig& cfg, double M_n,
                         double z_y, double z_n);

// Analytic gradients of the curves above (d/dz_y and d/dz_n respectively).
double intra_curve_gradient(LossKind kind, const LossConfig& cfg, double M,
                            double z_y);
double inter_curve_gradient(LossKind kind, const LossConfig& cfg, double M_n,
                            double z_y, double z_n);

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  double step = 1e-3;
  void validate() const;
};

// Intra family: vary z_y with fixed M. Inter family: vary z_n with fixed
// (z_y, M_n). For DSoftmax the intra curve uses epsilon from cfg and ignores
// M; the inter curve has no z_y dependence.
CurveTrace trace_loss_curve(LossKind kind, const LossConfig& cfg,
                            CurveFamily family, double fixed_mass,
                            double fixed_zy, const GridSpec& grid);

// Numeric termination points under the |gradient| < threshold_factor * s
// convention (default 0.02, grid step 1e-3). Intra: smallest grid z_y whose
// gradient magnitude is below the threshold (the gradient dies as z_y grows).
// Inter: largest grid z_n below the threshold (the gradient dies as z_n
// shrinks). Returns the grid edge when the gradient never crosses.
double numeric_intra_termination(LossKind kind, const LossConfig& cfg, double M,
                                 const GridSpec& grid = {},
                                 double threshold_factor = 0.02);
double numeric_inter_termination(LossKind kind, const LossConfig& cfg, double M_n,
                                 double z_y, const GridSpec& grid = {},
                                 double threshold_factor = 0.02);

// Grid point where the intra-curve gradient magnitude crosses s/2 — the
// inflection of the softplus branch; equals log(M)/s for Softmax.
double locate_intra_inflection(LossKind kind, const LossConfig& cfg, double M,
                               const GridSpec& grid = {});

// Mean/stddev/histogram of pairwise row cosines over sampled distinct pairs.
// Exhaustive when K(K-1)/2 <= pair_budget, otherwise uniform pairs without
// replacement (hash-set rejection).
SimilarityStats pairwise_cosine_stats(const Matrix& weights,
                                      std::uint64_t pair_budget, RngState& rng);

}  // namespace dsoftmax
