#pragma once

#include <Eigen/Dense>

#include "dcml/embedder.hpp"

namespace dcml {

enum class MaskMode { kFixed, kLearnable };

// K embedding-dimension masks, one per cluster. Learnable masks are stored
// raw and rectified at every use; fixed masks are binary with disjoint
// supports and never updated.
struct MaskSet {
  Eigen::MatrixXd raw;  // K x d
  MaskMode mode = MaskMode::kFixed;
  int depth = 0;

  int count() const { return static_cast<int>(raw.rows()); }
  int dim() const { return static_cast<int>(raw.cols()); }

  // Rectified mask values (what distances actually see).
  Eigen::MatrixXd effective() const { return raw.cwiseMax(0.0); }
  Eigen::VectorXd effective_row(int k) const { return raw.row(k).cwiseMax(0.0).transpose(); }

  // Sum of rectified masks: the single conquered mask (one mask is returned
  // unchanged). Throws on an empty set.
  Eigen::VectorXd conquer() const;

  // Doubles the set for the next division depth: learnable children copy
  // their parent; fixed mode re-initializes orthogonal blocks at 2K.
  void split_for_next_depth();
};

// Single all-ones root mask (identity subspace).
MaskSet init_root_mask(int dim, MaskMode mode);

// Mask i is 1 exactly on dimensions [i*d/K, (i+1)*d/K). Requires K | d.
MaskSet init_fixed_orthogonal(int dim, int cluster_count);

// K copies of the all-ones root (learnable non-progressive start).
MaskSet init_learnable_replicated(int dim, int cluster_count, int depth);

// Elementwise product with the rectified mask.
Eigen::VectorXd apply_mask(const Eigen::VectorXd& embedding, const Eigen::VectorXd& raw_mask);

struct MaskedUnitRows {
  Eigen::MatrixXd unit;    // normalized masked embeddings
  Eigen::MatrixXd masked;  // pre-normalization masked embeddings
  int zero_row_count = 0;
};

// rows .* relu(mask), then row normalization (the training-time pipeline).
MaskedUnitRows masked_unit_rows(const Eigen::MatrixXd& embeddings, const Eigen::VectorXd& raw_mask);

struct MaskedUnitGrads {
  Eigen::MatrixXd embeddings;  // grad wrt raw embeddings
  Eigen::VectorXd raw_mask;    // grad wrt the raw mask entries
};

// Chain rule through mask application and row normalization.
MaskedUnitGrads masked_unit_rows_backward(const Eigen::MatrixXd& embeddings,
                                          const Eigen::VectorXd& raw_mask,
                                          const MaskedUnitRows& fwd,
                                          const Eigen::MatrixXd& unit_grad);

}  // namespace dcml
