#include "dcml/subspace.hpp"

#include <stdexcept>

namespace dcml {

Eigen::VectorXd MaskSet::conquer() const {
  if (raw.rows() == 0) throw std::invalid_argument("conquer: empty mask set");
  // sequential row accumulation, so the result is exactly the literal sum of
  // rectified masks
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(raw.cols());
  for (Eigen::Index k = 0; k < raw.rows(); ++k) sum += raw.row(k).cwiseMax(0.0).transpose();
  return sum;
}

void MaskSet::split_for_next_depth() {
  const int k = count();
  if (mode == MaskMode::kFixed) {
    *this = init_fixed_orthogonal(dim(), 2 * k);
    return;
  }
  Eigen::MatrixXd next(2 * k, dim());
  for (int i = 0; i < k; ++i) {
    next.row(2 * i) = raw.row(i);
    next.row(2 * i + 1) = raw.row(i);
  }
  raw = std::move(next);
  ++depth;
}

MaskSet init_root_mask(int dim, MaskMode mode) {
  if (dim < 1) throw std::invalid_argument("init_root_mask: dim must be >= 1");
  MaskSet m;
  m.raw = Eigen::MatrixXd::Ones(1, dim);
  m.mode = mode;
  m.depth = 0;
  return m;
}

MaskSet init_fixed_orthogonal(int dim, int cluster_count) {
  if (cluster_count < 1 || dim < 1) {
    throw std::invalid_argument("init_fixed_orthogonal: K and d must be >= 1");
  }
  if (dim % cluster_count != 0) {
    throw std::invalid_argument("init_fixed_orthogonal: K=" + std::to_string(cluster_count) +
                                " does not divide d=" + std::to_string(dim));
  }
  MaskSet m;
  m.raw = Eigen::MatrixXd::Zero(cluster_count, dim);
  const int block = dim / cluster_count;
  for (int k = 0; k < cluster_count; ++k) {
    m.raw.row(k).segment(k * block, block).setOnes();
  }
  m.mode = MaskMode::kFixed;
  int depth = 0;
  while ((1 << depth) < cluster_count) ++depth;
  m.depth = depth;
  return m;
}

MaskSet init_learnable_replicated(int dim, int cluster_count, int depth) {
  if (cluster_count < 1 || dim < 1) {
    throw std::invalid_argument("init_learnable_replicated: K and d must be >= 1");
  }
  MaskSet m;
  m.raw = Eigen::MatrixXd::Ones(cluster_count, dim);
  m.mode = MaskMode::kLearnable;
  m.depth = depth;
  return m;
}

Eigen::VectorXd apply_mask(const Eigen::VectorXd& embedding, const Eigen::VectorXd& raw_mask) {
  if (embedding.size() != raw_mask.size()) {
    throw std::invalid_argument("apply_mask: dimension mismatch");
  }
  return embedding.cwiseProduct(raw_mask.cwiseMax(0.0));
}

MaskedUnitRows masked_unit_rows(const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& raw_mask) {
  if (embeddings.cols() != raw_mask.size()) {
    throw std::invalid_argument("masked_unit_rows: dimension mismatch");
  }
  MaskedUnitRows out;
  const Eigen::ArrayXd m = raw_mask.array().max(0.0);
  out.masked = embeddings.array().rowwise() * m.transpose();
  RowNormResult norm = normalize_rows(out.masked);
  out.unit = std::move(norm.unit);
  out.zero_row_count = static_cast<int>(norm.zero_rows.size());
  return out;
}

MaskedUnitGrads masked_unit_rows_backward(const Eigen::MatrixXd& embeddings,
                                          const Eigen::VectorXd& raw_mask,
                                          const MaskedUnitRows& fwd,
                                          const Eigen::MatrixXd& unit_grad) {
  const Eigen::MatrixXd masked_grad = normalize_rows_backward(fwd.masked, unit_grad);
  const Eigen::ArrayXd m = raw_mask.array().max(0.0);
  MaskedUnitGrads out;
  out.embeddings = masked_grad.array().rowwise() * m.transpose();
  // d masked / d mask_j = sum_i embeddings(i,j) * masked_grad(i,j), gated by
  // the rectifier subgradient (0 at raw <= 0).
  Eigen::ArrayXd mask_grad = (masked_grad.array() * embeddings.array()).colwise().sum().transpose();
  out.raw_mask = (mask_grad * (raw_mask.array() > 0.0).cast<double>()).matrix();
  return out;
}

}  // namespace dcml
