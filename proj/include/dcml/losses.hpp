#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dcml/rng.hpp"
#include "dcml/subspace.hpp"

namespace dcml {

enum class LossKind { kTriplet, kMargin, kNPairs, kSoftTriplet };

LossKind loss_kind_from_string(const std::string& name);
std::string to_string(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::kTriplet;
  double alpha = 0.2;   // hinge margin (triplet / margin loss)
  double beta = 1.2;    // margin-loss boundary
  double lambda = 0.0;  // weight of the mask orthogonality penalty

  void validate() const;
};

// Index triple into a batch's embedding rows; anchor and positive share a
// class, the negative does not.
struct Triplet {
  int anchor = 0;
  int positive = 0;
  int negative = 0;
};

struct LabeledPair {
  int i = 0;
  int j = 0;
  bool positive = false;
};

// All valid ordered (a,p,n) combinations, uniformly subsampled to cap when
// there are more. Enumeration order is deterministic (a, then p, then n).
std::vector<Triplet> mine_triplets(const std::vector<int>& labels, std::size_t cap, Rng& rng);

// All unordered sample pairs with a positive/negative tag, capped the same way.
std::vector<LabeledPair> mine_pairs(const std::vector<int>& labels, std::size_t cap, Rng& rng);

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd embedding_grad;  // wrt the embedding rows passed in
  bool empty = false;              // nothing to average over; value 0, flagged
};

// Distance between two embeddings in the subspace induced by the mask:
// rectified mask, elementwise product, row normalization, then L2.
double masked_distance(const Eigen::VectorXd& e_i, const Eigen::VectorXd& e_j,
                       const Eigen::VectorXd& raw_mask);

// Mean over triplets of [D^2(a,p) - D^2(a,n) + alpha]_+ .
LossResult triplet_loss(const Eigen::MatrixXd& rows, const std::vector<Triplet>& triplets,
                        double alpha);

// Hinge replaced by log(1 + exp(D^2(a,p) - D^2(a,n))).
LossResult soft_triplet_loss(const Eigen::MatrixXd& rows, const std::vector<Triplet>& triplets);

// Mean over pairs of [alpha + y (D - beta)]_+ with y=+1 for positive pairs.
LossResult margin_loss(const Eigen::MatrixXd& rows, const std::vector<LabeledPair>& pairs,
                       double alpha, double beta);

// One (anchor, positive) pair per class present at least twice; softmax-style
// loss over anchor-to-foreign-positive similarities. Throws when fewer than
// two classes contribute pairs.
LossResult npairs_loss(const Eigen::MatrixXd& rows, const std::vector<int>& labels);

struct MaskPenaltyResult {
  double value = 0.0;
  Eigen::MatrixXd raw_grad;  // wrt raw mask entries
  int zero_norm_masks = 0;
};

// Sum of pairwise cosine similarities between rectified masks over ordered
// pairs i != j (each unordered pair counts twice).
MaskPenaltyResult mask_orthogonality_loss(const Eigen::MatrixXd& raw_masks);

// Mines per `kind` and evaluates; the entry point used by the trainer.
LossResult batch_loss(const LossConfig& config, const Eigen::MatrixXd& rows,
                      const std::vector<int>& labels, std::size_t cap, Rng& rng);

}  // namespace dcml
