#include "dsoftmax/dissection.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "dsoftmax/core_math.hpp"

namespace dsoftmax {

namespace {

double fmt_append(std::ostringstream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
  return v;
}

// psi for the positive column of the entangled curves; identity for DSoftmax
// (whose intra curve is parameterized by epsilon instead of M).
MarginTransform curve_psi(LossKind kind, const LossConfig& cfg, double z_y) {
  if (kind == LossKind::DSoftmax) return {clamp_cosine(z_y), 1.0};
  return margin_transform(z_y, kind, cfg.m1, cfg.m2, cfg.m3);
}

}  // namespace

const char* to_string(CurveFamily family) {
  return family == CurveFamily::Intra ? "intra" : "inter";
}

double intra_termination_point(double M, double s) {
  if (!(M > 0.0)) throw std::invalid_argument("intra_termination_point: M must be > 0");
  if (!(s > 0.0)) throw std::invalid_argument("intra_termination_point: s must be > 0");
  return std::log(M) / s;
}

double inter_termination_point(double z_y, double M_n, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("inter_termination_point: s must be > 0");
  if (M_n < 0.0) throw std::invalid_argument("inter_termination_point: M_n must be >= 0");
  if (M_n == 0.0) return z_y;
  // log(e^{s z_y} + M_n) via max shift on (s z_y, log M_n).
  double a = s * z_y, b = std::log(M_n);
  double hi = std::max(a, b), lo = std::min(a, b);
  return (hi + std::log1p(std::exp(lo - hi))) / s;
}

double intra_curve_value(LossKind kind, const LossConfig& cfg, double M,
                         double z_y) {
  if (kind == LossKind::DSoftmax) return d_softmax_intra(z_y, cfg).loss;
  if (!(M > 0.0)) throw std::invalid_argument("intra_curve_value: M must be > 0");
  MarginTransform mt = curve_psi(kind, cfg, z_y);
  return softplus(std::log(M) - cfg.s * mt.psi);
}

double intra_curve_gradient(LossKind kind, const LossConfig& cfg, double M,
                            double z_y) {
  if (kind == LossKind::DSoftmax) return d_softmax_intra(z_y, cfg).dz_y;
  if (!(M > 0.0)) throw std::invalid_argument("intra_curve_gradient: M must be > 0");
  MarginTransform mt = curve_psi(kind, cfg, z_y);
  return -cfg.s * mt.dpsi * logistic(std::log(M) - cfg.s * mt.psi);
}

double inter_curve_value(LossKind kind, const LossConfig& cfg, double M_n,
                         double z_y, double z_n) {
  if (M_n < 0.0) throw std::invalid_argument("inter_curve_value: M_n must be >= 0");
  double log_mass = M_n == 0.0 ? -std::numeric_limits<double>::infinity()
                               : std::log(M_n);
  double a = cfg.s * z_n;
  double hi = std::max(a, log_mass), lo = std::min(a, log_mass);
  double log_negs = std::isinf(hi) ? a : hi + std::log1p(std::exp(lo - hi));
  if (kind == LossKind::DSoftmax) return softplus(log_negs);
  MarginTransform mt = curve_psi(kind, cfg, z_y);
  return softplus(log_negs - cfg.s * mt.psi);
}

double inter_curve_gradient(LossKind kind, const LossConfig& cfg, double M_n,
                            double z_y, double z_n) {
  if (M_n < 0.0) throw std::invalid_argument("inter_curve_gradient: M_n must be >= 0");
  // s e^{s z_n} / (anchor + e^{s z_n} + M_n); anchor is e^{s psi(z_y)} for the
  // entangled forms and the constant 1 for DSoftmax.
  double log_anchor = 0.0;
  if (kind != LossKind::DSoftmax)
    log_anchor = cfg.s * curve_psi(kind, cfg, z_y).psi;
  std::vector<double> terms = {log_anchor, cfg.s * z_n};
  if (M_n > 0.0) terms.push_back(std::log(M_n));
  double denom = log_sum_exp(terms);
  return cfg.s * std::exp(cfg.s * z_n - denom);
}

void GridSpec::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("grid: step must be > 0");
  if (!(lo < hi)) throw std::invalid_argument("grid: lo must be < hi");
  if (lo < -1.0 || hi > 1.0)
    throw std::invalid_argument("grid: must lie within [-1, 1]");
}

CurveTrace trace_loss_curve(LossKind kind, const LossConfig& cfg,
                            CurveFamily family, double fixed_mass,
                            double fixed_zy, const GridSpec& grid) {
  grid.validate();
  CurveTrace trace;
  trace.kind = kind;
  trace.family = family;
  trace.s = cfg.s;
  trace.fixed_mass = fixed_mass;
  trace.fixed_zy = fixed_zy;
  const std::size_t count =
      static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step)) + 1;
  trace.x.reserve(count);
  trace.y.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double z = std::min(grid.lo + static_cast<double>(i) * grid.step, grid.hi);
    trace.x.push_back(z);
    trace.y.push_back(family == CurveFamily::Intra
                          ? intra_curve_value(kind, cfg, fixed_mass, z)
                          : inter_curve_value(kind, cfg, fixed_mass, fixed_zy, z));
  }
  return trace;
}

double numeric_intra_termination(LossKind kind, const LossConfig& cfg, double M,
                                 const GridSpec& grid, double threshold_factor) {
  grid.validate();
  const double threshold = threshold_factor * cfg.s;
  for (double z = grid.lo; z <= grid.hi + 1e-15; z += grid.step)
    if (std::fabs(intra_curve_gradient(kind, cfg, M, z)) < threshold) return z;
  return grid.hi;
}

double numeric_inter_termination(LossKind kind, const LossConfig& cfg, double M_n,
                                 double z_y, const GridSpec& grid,
                                 double threshold_factor) {
  grid.validate();
  const double threshold = threshold_factor * cfg.s;
  for (double z = grid.hi; z >= grid.lo - 1e-15; z -= grid.step)
    if (std::fabs(inter_curve_gradient(kind, cfg, M_n, z_y, z)) < threshold)
      return z;
  return grid.lo;
}

double locate_intra_inflection(LossKind kind, const LossConfig& cfg, double M,
                               const GridSpec& grid) {
  grid.validate();
  const double half = 0.5 * cfg.s;
  for (double z = grid.lo; z <= grid.hi + 1e-15; z += grid.step)
    if (std::fabs(intra_curve_gradient(kind, cfg, M, z)) <= half) return z;
  return grid.hi;
}

std::string CurveTrace::to_csv() const {
  std::ostringstream out;
  out << "# kind=" << to_string(kind) << " family=" << to_string(family)
      << " s=";
  fmt_append(out, s);
  out << " fixed_mass=";
  fmt_append(out, fixed_mass);
  if (family == CurveFamily::Inter) {
    out << " fixed_zy=";
    fmt_append(out, fixed_zy);
  }
  out << "\n";
  out << (family == CurveFamily::Intra ? "z_y" : "z_n") << ",loss\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    fmt_append(out, x[i]);
    out << ",";
    fmt_append(out, y[i]);
    out << "\n";
  }
  return out.str();
}

std::string SimilarityStats::to_csv() const {
  std::ostringstream out;
  out << "# mean=";
  fmt_append(out, mean);
  out << " stddev=";
  fmt_append(out, stddev);
  out << " pairs=" << pair_count << "\n";
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < bin_counts.size(); ++b) {
    fmt_append(out, bin_lo(b));
    out << ",";
    fmt_append(out, bin_hi(b));
    out << "," << bin_counts[b] << "\n";
  }
  return out.str();
}

SimilarityStats pairwise_cosine_stats(const Matrix& weights,
                                      std::uint64_t pair_budget, RngState& rng) {
  const std::uint64_t k = weights.rows();
  if (k < 2) throw std::invalid_argument("pairwise_cosine_stats: need K >= 2 rows");
  if (pair_budget < 1)
    throw std::invalid_argument("pairwise_cosine_stats: pair_budget must be >= 1");

  Matrix wn = l2_normalize_rows(weights, "pairwise_cosine_stats");
  const std::size_t n = weights.cols();

  SimilarityStats stats;
  stats.bin_counts.assign(SimilarityStats::kNumBins, 0);

  double mean = 0.0, m2 = 0.0;
  std::uint64_t count = 0;
  auto accumulate = [&](std::uint64_t i, std::uint64_t j) {
    const double* a = wn.row(i).data();
    const double* b = wn.row(j).data();
    double c = 0.0;
    for (std::size_t t = 0; t < n; ++t) c += a[t] * b[t];
    ++count;
    double delta = c - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (c - mean);
    auto bin = static_cast<std::int64_t>(
        std::floor((c + 1.0) * 0.5 * SimilarityStats::kNumBins));
    if (bin < 0) bin = 0;
    if (bin >= static_cast<std::int64_t>(SimilarityStats::kNumBins))
      bin = SimilarityStats::kNumBins - 1;
    ++stats.bin_counts[static_cast<std::size_t>(bin)];
  };

  const std::uint64_t total = k * (k - 1) / 2;
  if (total <= pair_budget) {
    for (std::uint64_t i = 0; i + 1 < k; ++i)
      for (std::uint64_t j = i + 1; j < k; ++j) accumulate(i, j);
  } else {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(pair_budget * 2);
    while (seen.size() < pair_budget) {
      std::uint64_t i = rng.next_below(k);
      std::uint64_t j = rng.next_below(k);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (seen.insert(i * k + j).second) accumulate(i, j);
    }
  }

  stats.mean = mean;
  stats.stddev = count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) : 0.0;
  stats.pair_count = count;
  return stats;
}

}  // namespace dsoftmax
