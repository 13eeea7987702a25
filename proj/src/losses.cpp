#include "dsoftmax/losses.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dsoftmax {

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Softmax: return "Softmax";
    case LossKind::SphereFace: return "SphereFace";
    case LossKind::CosFace: return "CosFace";
    case LossKind::ArcFace: return "ArcFace";
    case LossKind::DSoftmax: return "DSoftmax";
    case LossKind::HybridSoftmaxInter: return "HybridSoftmaxInter";
    case LossKind::HybridArcInter: return "HybridArcInter";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string& name) {
  static const std::map<std::string, LossKind> table = {
      {"Softmax", LossKind::Softmax},
      {"SphereFace", LossKind::SphereFace},
      {"CosFace", LossKind::CosFace},
      {"ArcFace", LossKind::ArcFace},
      {"DSoftmax", LossKind::DSoftmax},
      {"HybridSoftmaxInter", LossKind::HybridSoftmaxInter},
      {"HybridArcInter", LossKind::HybridArcInter},
  };
  auto it = table.find(name);
  if (it == table.end())
    throw std::invalid_argument("unknown loss kind: " + name);
  return it->second;
}

bool is_entangled(LossKind kind) { return kind != LossKind::DSoftmax; }

double LossConfig::epsilon() const { return std::exp(s * d); }

double epsilon_from_d(double d, double s) { return std::exp(s * d); }

void LossConfig::validate() const {
  if (!(s > 0.0)) throw std::invalid_argument("loss.s: must be > 0");
  if (!(d > 0.0) || d > 1.0)
    throw std::invalid_argument("loss.d: must be in (0, 1]");
  if (m1 < 1) throw std::invalid_argument("loss.m1: must be a positive integer");
  if (m2 < 0.0 || m2 >= 1.5707963267948966)
    throw std::invalid_argument("loss.m2: must be in [0, pi/2)");
  if (m3 < 0.0 || m3 >= 1.0)
    throw std::invalid_argument("loss.m3: must be in [0, 1)");
}

std::string LossConfig::serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "kind = " << to_string(kind) << "\n"
      << "s = " << s << "\n"
      << "d = " << d << "\n"
      << "m1 = " << m1 << "\n"
      << "m2 = " << m2 << "\n"
      << "m3 = " << m3 << "\n";
  return out.str();
}

LossConfig LossConfig::deserialize(const std::string& text) {
  LossConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "kind") cfg.kind = loss_kind_from_string(value);
    else if (key == "s") cfg.s = std::stod(value);
    else if (key == "d") cfg.d = std::stod(value);
    else if (key == "m1") cfg.m1 = std::stoi(value);
    else if (key == "m2") cfg.m2 = std::stod(value);
    else if (key == "m3") cfg.m3 = std::stod(value);
    else if (key == "eps" || key == "epsilon")
      throw std::invalid_argument("LossConfig: eps is derived, refuse to load it");
    else throw std::invalid_argument("LossConfig: unknown key " + key);
  }
  return cfg;
}

void ActivationBatch::validate() const {
  if (positive_col.size() != z.rows())
    throw std::invalid_argument("ActivationBatch: positive_col size mismatch");
  z.require_finite("ActivationBatch.z");
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (positive_col[i] != kNoPositive && positive_col[i] >= z.cols())
      throw std::invalid_argument("ActivationBatch: positive_col out of range");
    for (std::size_t j = 0; j < z.cols(); ++j) {
      double v = z.at(i, j);
      if (v < -1.0 || v > 1.0)
        throw std::invalid_argument("ActivationBatch: activation outside [-1, 1]");
    }
  }
}

MarginTransform margin_transform(double z_y, LossKind kind, int m1, double m2,
                                 double m3) {
  double z = clamp_cosine(z_y);
  switch (kind) {
    case LossKind::Softmax:
    case LossKind::HybridSoftmaxInter:
      return {z, 1.0};
    case LossKind::SphereFace: {
      double theta = std::acos(z);
      double root = std::sqrt(1.0 - z * z);
      return {std::cos(m1 * theta), m1 * std::sin(m1 * theta) / root};
    }
    case LossKind::ArcFace:
    case LossKind::HybridArcInter: {
      double theta = std::acos(z);
      double root = std::sqrt(1.0 - z * z);
      return {std::cos(theta + m2), std::sin(theta + m2) / root};
    }
    case LossKind::CosFace:
      return {z - m3, 1.0};
    case LossKind::DSoftmax:
      break;
  }
  throw std::invalid_argument("margin_transform: not a margin-family kind");
}

namespace {

// Shared body of the entangled family pass. Returns the loss and fills the
// gradient row; positive-column gradient uses dpsi from the margin transform.
double family_row(std::span<const double> z_row, std::size_t y,
                  const LossConfig& cfg, std::span<double> dz_row) {
  const double s = cfg.s;
  MarginTransform mt = margin_transform(z_row[y], cfg.kind, cfg.m1, cfg.m2, cfg.m3);
  const double a_y = s * mt.psi;

  // log(sum_{k != y} e^{s z_k}) via max shift.
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z_row.size(); ++k)
    if (k != y) m = std::max(m, s * z_row[k]);

  double loss;
  double lse;  // log of the full denominator e^{a_y} + sum_negs
  if (std::isinf(m)) {
    // No negatives: loss 0, p_y = 1.
    loss = 0.0;
    lse = a_y;
  } else {
    double sum = 0.0;
    for (std::size_t k = 0; k < z_row.size(); ++k)
      if (k != y) sum += std::exp(s * z_row[k] - m);
    double lse_negs = m + std::log(sum);
    loss = softplus(lse_negs - a_y);
    lse = a_y > lse_negs ? a_y + std::log1p(std::exp(lse_negs - a_y))
                         : lse_negs + std::log1p(std::exp(a_y - lse_negs));
  }

  for (std::size_t k = 0; k < z_row.size(); ++k) {
    if (k == y) continue;
    dz_row[k] = s * std::exp(s * z_row[k] - lse);
  }
  double p_y = std::exp(a_y - lse);
  dz_row[y] = s * (p_y - 1.0) * mt.dpsi;
  return loss;
}

LossOutput make_output(const ActivationBatch& batch) {
  LossOutput out;
  out.row_loss.assign(batch.batch_size(), 0.0);
  out.dz = Matrix(batch.batch_size(), batch.num_cols());
  return out;
}

void finish_mean(LossOutput& out) {
  double sum = 0.0;
  for (double v : out.row_loss) sum += v;
  out.mean_loss = out.row_loss.empty() ? 0.0 : sum / out.row_loss.size();
}

void require_positives(const ActivationBatch& batch, const char* who) {
  for (std::size_t i = 0; i < batch.batch_size(); ++i)
    if (batch.positive_col[i] == ActivationBatch::kNoPositive)
      throw std::invalid_argument(std::string(who) +
                                  ": row without positive column");
}

}  // namespace

LossOutput softmax_family_forward_backward(const ActivationBatch& batch,
                                           const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::Softmax:
    case LossKind::SphereFace:
    case LossKind::CosFace:
    case LossKind::ArcFace:
      break;
    default:
      throw std::invalid_argument(
          "softmax_family_forward_backward: kind not in the entangled family");
  }
  batch.validate();
  require_positives(batch, "softmax_family_forward_backward");

  LossOutput out = make_output(batch);
  for (std::size_t i = 0; i < batch.batch_size(); ++i)
    out.row_loss[i] =
        family_row(batch.z.row(i), batch.positive_col[i], cfg, out.dz.row(i));
  finish_mean(out);
  return out;
}

IntraResult d_softmax_intra(double z_y, const LossConfig& cfg) {
  double t = cfg.log_epsilon() - cfg.s * z_y;
  return {softplus(t), -cfg.s * logistic(t)};
}

double d_softmax_inter(std::span<const double> z_negs, const LossConfig& cfg,
                       std::span<double> dz_out) {
  if (z_negs.empty()) return 0.0;
  const double s = cfg.s;
  double m = 0.0;  // the implicit +1 term contributes exp(0)
  for (double z : z_negs) m = std::max(m, s * z);
  double loss;
  if (m == 0.0) {
    // All activations non-positive: keep precision when the +1 dominates.
    double sum = 0.0;
    for (double z : z_negs) sum += std::exp(s * z);
    loss = std::log1p(sum);
  } else {
    double sum = std::exp(-m);
    for (double z : z_negs) sum += std::exp(s * z - m);
    loss = m + std::log(sum);
  }
  for (std::size_t k = 0; k < z_negs.size(); ++k)
    dz_out[k] = s * std::exp(s * z_negs[k] - loss);
  return loss;
}

LossOutput d_softmax_full(const ActivationBatch& batch, const LossConfig& cfg) {
  batch.validate();
  require_positives(batch, "d_softmax_full");

  LossOutput out = make_output(batch);
  const std::size_t cols = batch.num_cols();
  out.row_intra.assign(batch.batch_size(), 0.0);
  out.row_inter.assign(batch.batch_size(), 0.0);

  std::vector<double> negs(cols ? cols - 1 : 0);
  std::vector<double> dnegs(cols ? cols - 1 : 0);
  for (std::size_t i = 0; i < batch.batch_size(); ++i) {
    const std::size_t y = batch.positive_col[i];
    auto z_row = batch.z.row(i);

    IntraResult intra = d_softmax_intra(z_row[y], cfg);
    out.dz.at(i, y) = intra.dz_y;

    std::size_t m = 0;
    for (std::size_t k = 0; k < cols; ++k)
      if (k != y) negs[m++] = z_row[k];
    double inter = d_softmax_inter({negs.data(), m}, cfg, {dnegs.data(), m});
    m = 0;
    for (std::size_t k = 0; k < cols; ++k)
      if (k != y) out.dz.at(i, k) = dnegs[m++];

    out.row_intra[i] = intra.loss;
    out.row_inter[i] = inter;
    out.row_loss[i] = intra.loss + inter;
  }
  finish_mean(out);
  return out;
}

LossOutput hybrid_inter_only(const ActivationBatch& batch, const LossConfig& cfg) {
  if (cfg.kind != LossKind::HybridSoftmaxInter &&
      cfg.kind != LossKind::HybridArcInter)
    throw std::invalid_argument("hybrid_inter_only: kind is not a hybrid");
  batch.validate();
  require_positives(batch, "hybrid_inter_only");

  LossConfig family = cfg;
  family.kind = cfg.kind == LossKind::HybridSoftmaxInter ? LossKind::Softmax
                                                         : LossKind::ArcFace;
  LossOutput out = softmax_family_forward_backward(batch, family);

  out.row_intra.assign(batch.batch_size(), 0.0);
  out.row_inter = out.row_loss;
  for (std::size_t i = 0; i < batch.batch_size(); ++i) {
    const std::size_t y = batch.positive_col[i];
    IntraResult intra = d_softmax_intra(batch.z.at(i, y), cfg);
    out.dz.at(i, y) = intra.dz_y;  // family's positive gradient is dropped
    out.row_intra[i] = intra.loss;
    out.row_loss[i] += intra.loss;
  }
  finish_mean(out);
  return out;
}

LossOutput loss_forward_backward(const ActivationBatch& batch,
                                 const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::Softmax:
    case LossKind::SphereFace:
    case LossKind::CosFace:
    case LossKind::ArcFace:
      return softmax_family_forward_backward(batch, cfg);
    case LossKind::DSoftmax:
      return d_softmax_full(batch, cfg);
    case LossKind::HybridSoftmaxInter:
    case LossKind::HybridArcInter:
      return hybrid_inter_only(batch, cfg);
  }
  throw std::invalid_argument("loss_forward_backward: unknown kind");
}

ParameterGradients chain_to_parameters(const Matrix& dz, const Matrix& features,
                                       const Matrix& weights,
                                       const Matrix& activations) {
  const std::size_t b = features.rows(), sc = weights.rows(), n = features.cols();
  if (dz.rows() != b || dz.cols() != sc || activations.rows() != b ||
      activations.cols() != sc || weights.cols() != n)
    throw std::invalid_argument("chain_to_parameters: shape mismatch");
  dz.require_finite("chain_to_parameters(dz)");

  std::vector<double> xnorm, wnorm;
  Matrix xn = l2_normalize_rows(features, "chain_to_parameters(features)", &xnorm);
  Matrix wn = l2_normalize_rows(weights, "chain_to_parameters(weights)", &wnorm);

  ParameterGradients g{Matrix(b, n), Matrix(sc, n)};
  // dx_i = [sum_j dz_ij w^_j - (sum_j dz_ij z_ij) x^_i] / |x_i|
  // dw_j = [sum_i dz_ij x^_i - (sum_i dz_ij z_ij) w^_j] / |w_j|
  std::vector<double> wcoef(sc, 0.0);  // sum_i dz_ij z_ij per column
  for (std::size_t i = 0; i < b; ++i) {
    const double* x = xn.row(i).data();
    double* dx = g.dx.row(i).data();
    double xcoef = 0.0;
    for (std::size_t j = 0; j < sc; ++j) {
      const double d = dz.at(i, j);
      if (d == 0.0) continue;
      const double z = activations.at(i, j);
      const double* w = wn.row(j).data();
      double* dwj = g.dw.row(j).data();
      for (std::size_t k = 0; k < n; ++k) {
        dx[k] += d * w[k];
        dwj[k] += d * x[k];
      }
      xcoef += d * z;
      wcoef[j] += d * z;
    }
    for (std::size_t k = 0; k < n; ++k) dx[k] = (dx[k] - xcoef * x[k]) / xnorm[i];
  }
  for (std::size_t j = 0; j < sc; ++j) {
    const double* w = wn.row(j).data();
    double* dwj = g.dw.row(j).data();
    for (std::size_t k = 0; k < n; ++k)
      dwj[k] = (dwj[k] - wcoef[j] * w[k]) / wnorm[j];
  }
  return g;
}

ParameterGradients chain_to_parameters(const Matrix& dz, const Matrix& features,
                                       const Matrix& weights) {
  return chain_to_parameters(dz, features, weights,
                             cosine_activations(features, weights));
}

}  // namespace dsoftmax
