#include "dcml/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcml {

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "triplet") return LossKind::kTriplet;
  if (name == "margin") return LossKind::kMargin;
  if (name == "npairs") return LossKind::kNPairs;
  if (name == "soft_triplet") return LossKind::kSoftTriplet;
  throw std::invalid_argument("unknown loss kind: " + name);
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kTriplet: return "triplet";
    case LossKind::kMargin: return "margin";
    case LossKind::kNPairs: return "npairs";
    case LossKind::kSoftTriplet: return "soft_triplet";
  }
  return "?";
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("loss: alpha must be finite and >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("loss: beta must be finite and > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("loss: lambda must be finite and >= 0");
}

std::vector<Triplet> mine_triplets(const std::vector<int>& labels, std::size_t cap, Rng& rng) {
  const int n = static_cast<int>(labels.size());
  std::vector<Triplet> all;
  for (int a = 0; a < n; ++a) {
    for (int p = 0; p < n; ++p) {
      if (p == a || labels[static_cast<std::size_t>(p)] != labels[static_cast<std::size_t>(a)]) continue;
      for (int neg = 0; neg < n; ++neg) {
        if (labels[static_cast<std::size_t>(neg)] == labels[static_cast<std::size_t>(a)]) continue;
        all.push_back({a, p, neg});
      }
    }
  }
  if (cap > 0 && all.size() > cap) all = sample_without_replacement(std::move(all), cap, rng);
  return all;
}

std::vector<LabeledPair> mine_pairs(const std::vector<int>& labels, std::size_t cap, Rng& rng) {
  const int n = static_cast<int>(labels.size());
  std::vector<LabeledPair> all;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      all.push_back({i, j, labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]});
    }
  }
  if (cap > 0 && all.size() > cap) all = sample_without_replacement(std::move(all), cap, rng);
  return all;
}

double masked_distance(const Eigen::VectorXd& e_i, const Eigen::VectorXd& e_j,
                       const Eigen::VectorXd& raw_mask) {
  if (e_i.size() != e_j.size() || e_i.size() != raw_mask.size()) {
    throw std::invalid_argument("masked_distance: dimension mismatch");
  }
  Eigen::MatrixXd rows(2, e_i.size());
  rows.row(0) = e_i.transpose();
  rows.row(1) = e_j.transpose();
  const MaskedUnitRows mu = masked_unit_rows(rows, raw_mask);
  return (mu.unit.row(0) - mu.unit.row(1)).norm();
}

LossResult triplet_loss(const Eigen::MatrixXd& rows, const std::vector<Triplet>& triplets,
                        double alpha) {
  LossResult out;
  out.embedding_grad = Eigen::MatrixXd::Zero(rows.rows(), rows.cols());
  if (triplets.empty()) {
    out.empty = true;
    return out;
  }
  const double scale = 1.0 / static_cast<double>(triplets.size());
  for (const Triplet& t : triplets) {
    const Eigen::RowVectorXd ap = rows.row(t.anchor) - rows.row(t.positive);
    const Eigen::RowVectorXd an = rows.row(t.anchor) - rows.row(t.negative);
    const double pre = ap.squaredNorm() - an.squaredNorm() + alpha;
    if (pre <= 0.0) continue;  // clamped: zero contribution and zero gradient
    out.value += scale * pre;
    out.embedding_grad.row(t.anchor) += scale * 2.0 * (ap - an);
    out.embedding_grad.row(t.positive) -= scale * 2.0 * ap;
    out.embedding_grad.row(t.negative) += scale * 2.0 * an;
  }
  return out;
}

LossResult soft_triplet_loss(const Eigen::MatrixXd& rows, const std::vector<Triplet>& triplets) {
  LossResult out;
  out.embedding_grad = Eigen::MatrixXd::Zero(rows.rows(), rows.cols());
  if (triplets.empty()) {
    out.empty = true;
    return out;
  }
  const double scale = 1.0 / static_cast<double>(triplets.size());
  for (const Triplet& t : triplets) {
    const Eigen::RowVectorXd ap = rows.row(t.anchor) - rows.row(t.positive);
    const Eigen::RowVectorXd an = rows.row(t.anchor) - rows.row(t.negative);
    const double z = ap.squaredNorm() - an.squaredNorm();
    // log(1 + e^z), stable on both tails
    const double loss = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    const double sig = 1.0 / (1.0 + std::exp(-z));
    out.value += scale * loss;
    out.embedding_grad.row(t.anchor) += scale * sig * 2.0 * (ap - an);
    out.embedding_grad.row(t.positive) -= scale * sig * 2.0 * ap;
    out.embedding_grad.row(t.negative) += scale * sig * 2.0 * an;
  }
  return out;
}

LossResult margin_loss(const Eigen::MatrixXd& rows, const std::vector<LabeledPair>& pairs,
                       double alpha, double beta) {
  LossResult out;
  out.embedding_grad = Eigen::MatrixXd::Zero(rows.rows(), rows.cols());
  if (pairs.empty()) {
    out.empty = true;
    return out;
  }
  const double scale = 1.0 / static_cast<double>(pairs.size());
  for (const LabeledPair& p : pairs) {
    const Eigen::RowVectorXd diff = rows.row(p.i) - rows.row(p.j);
    const double dist = diff.norm();
    const double y = p.positive ? 1.0 : -1.0;
    const double pre = alpha + y * (dist - beta);
    if (pre <= 0.0) continue;
    out.value += scale * pre;
    const Eigen::RowVectorXd ddist = diff / std::max(dist, 1e-12);
    out.embedding_grad.row(p.i) += scale * y * ddist;
    out.embedding_grad.row(p.j) -= scale * y * ddist;
  }
  return out;
}

LossResult npairs_loss(const Eigen::MatrixXd& rows, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != rows.rows()) {
    throw std::invalid_argument("npairs_loss: label count mismatch");
  }
  // First two occurrences of each class form its (anchor, positive) pair.
  std::vector<int> anchors, positives;
  {
    std::vector<int> order;  // distinct classes in first-seen order
    std::vector<int> first_seen;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      bool found = false;
      for (std::size_t k = 0; k < order.size(); ++k) {
        if (order[k] == c) {
          if (first_seen[k] >= 0) {
            anchors.push_back(first_seen[k]);
            positives.push_back(i);
            first_seen[k] = -1;  // pair complete
          }
          found = true;
          break;
        }
      }
      if (!found) {
        order.push_back(c);
        first_seen.push_back(i);
      }
    }
  }
  const int n_pairs = static_cast<int>(anchors.size());
  if (n_pairs < 2) {
    throw std::invalid_argument("npairs_loss: need pairs from at least 2 classes");
  }

  LossResult out;
  out.embedding_grad = Eigen::MatrixXd::Zero(rows.rows(), rows.cols());
  const double scale = 1.0 / static_cast<double>(n_pairs);
  for (int c = 0; c < n_pairs; ++c) {
    const Eigen::RowVectorXd a = rows.row(anchors[static_cast<std::size_t>(c)]);
    const double s_own = a.dot(rows.row(positives[static_cast<std::size_t>(c)]));
    Eigen::VectorXd diff(n_pairs);
    double max_diff = 0.0;  // log-sum-exp anchor includes the implicit 1 = e^0
    for (int o = 0; o < n_pairs; ++o) {
      diff[o] = (o == c) ? -std::numeric_limits<double>::infinity()
                         : a.dot(rows.row(positives[static_cast<std::size_t>(o)])) - s_own;
      if (o != c) max_diff = std::max(max_diff, diff[o]);
    }
    double denom = std::exp(-max_diff);
    for (int o = 0; o < n_pairs; ++o) {
      if (o != c) denom += std::exp(diff[o] - max_diff);
    }
    out.value += scale * (max_diff + std::log(denom));

    double w_sum = 0.0;
    for (int o = 0; o < n_pairs; ++o) {
      if (o == c) continue;
      const double w = std::exp(diff[o] - max_diff) / denom;  // dL/ds_{c,o} per anchor
      w_sum += w;
      out.embedding_grad.row(anchors[static_cast<std::size_t>(c)]) +=
          scale * w * rows.row(positives[static_cast<std::size_t>(o)]);
      out.embedding_grad.row(positives[static_cast<std::size_t>(o)]) += scale * w * a;
    }
    out.embedding_grad.row(anchors[static_cast<std::size_t>(c)]) -=
        scale * w_sum * rows.row(positives[static_cast<std::size_t>(c)]);
    out.embedding_grad.row(positives[static_cast<std::size_t>(c)]) -= scale * w_sum * a;
  }
  return out;
}

MaskPenaltyResult mask_orthogonality_loss(const Eigen::MatrixXd& raw_masks) {
  const int k = static_cast<int>(raw_masks.rows());
  if (k < 2) throw std::invalid_argument("mask_orthogonality_loss: need at least 2 masks");

  MaskPenaltyResult out;
  out.raw_grad = Eigen::MatrixXd::Zero(raw_masks.rows(), raw_masks.cols());
  const Eigen::MatrixXd eff = raw_masks.cwiseMax(0.0);
  const Eigen::MatrixXd gate = (raw_masks.array() > 0.0).cast<double>();

  std::vector<double> norms(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double n = eff.row(i).norm();
    if (n <= kNormEpsilon) ++out.zero_norm_masks;
    norms[static_cast<std::size_t>(i)] = std::max(n, kNormEpsilon);
  }

  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double ni = norms[static_cast<std::size_t>(i)];
      const double nj = norms[static_cast<std::size_t>(j)];
      const double dot = eff.row(i).dot(eff.row(j));
      const double cosine = dot / (ni * nj);
      out.value += 2.0 * cosine;  // ordered pairs (i,j) and (j,i)
      const Eigen::RowVectorXd d_i = eff.row(j) / (ni * nj) - cosine * eff.row(i) / (ni * ni);
      const Eigen::RowVectorXd d_j = eff.row(i) / (ni * nj) - cosine * eff.row(j) / (nj * nj);
      out.raw_grad.row(i) += 2.0 * d_i.cwiseProduct(gate.row(i));
      out.raw_grad.row(j) += 2.0 * d_j.cwiseProduct(gate.row(j));
    }
  }
  return out;
}

LossResult batch_loss(const LossConfig& config, const Eigen::MatrixXd& rows,
                      const std::vector<int>& labels, std::size_t cap, Rng& rng) {
  switch (config.kind) {
    case LossKind::kTriplet:
      return triplet_loss(rows, mine_triplets(labels, cap, rng), config.alpha);
    case LossKind::kSoftTriplet:
      return soft_triplet_loss(rows, mine_triplets(labels, cap, rng));
    case LossKind::kMargin:
      return margin_loss(rows, mine_pairs(labels, cap, rng), config.alpha, config.beta);
    case LossKind::kNPairs:
      return npairs_loss(rows, labels);
  }
  throw std::logic_error("unreachable loss kind");
}

}  // namespace dcml
