#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dcml/rng.hpp"

namespace dcml {

// Multilayer perceptron: feature_dim -> hidden... -> embedding_dim, rectifier
// on hidden layers, identity output. Gradients are hand-derived for this
// fixed architecture.
class EmbeddingNetwork {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
  };

  // Activations cached by forward() for the matching backward().
  struct ForwardCache {
    Eigen::MatrixXd input;                  // batch x in_dim
    std::vector<Eigen::MatrixXd> hidden;    // post-rectifier, per hidden layer
    Eigen::MatrixXd dropout_scale;          // empty when dropout off
    bool valid = false;
  };

  struct Gradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;

    void set_zero();
    bool all_finite() const;
  };

  EmbeddingNetwork() = default;
  // Uniform +-1/sqrt(fan_in) init for weights and biases.
  EmbeddingNetwork(int in_dim, const std::vector<int>& hidden_dims, int out_dim, std::uint64_t seed);

  int input_dim() const { return in_dim_; }
  int output_dim() const { return out_dim_; }
  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return layers_[i]; }
  const Layer& layer(std::size_t i) const { return layers_[i]; }
  std::vector<int> hidden_dims() const;
  Eigen::Index parameter_count() const;

  // Raw (unnormalized, unmasked) embeddings, one row per sample.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& batch, ForwardCache* cache = nullptr) const;
  // Training-time forward with inverted dropout (keep prob 1-p) on the last
  // hidden activation. p = 0 is a plain forward.
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& batch, double dropout_p, Rng& rng,
                                ForwardCache* cache) const;

  // Exact gradients of sum(upstream .* output) wrt all parameters. Throws if
  // the cache does not come from a matching forward pass.
  Gradients backward(const ForwardCache& cache, const Eigen::MatrixXd& upstream_grad,
                     Eigen::MatrixXd* input_grad = nullptr) const;

  Gradients zero_gradients() const;

 private:
  int in_dim_ = 0;
  int out_dim_ = 0;
  std::vector<Layer> layers_;
};

struct RowNormResult {
  Eigen::MatrixXd unit;        // rows scaled to unit length
  Eigen::VectorXd norms;       // pre-guard row norms
  std::vector<int> zero_rows;  // rows that hit the epsilon guard
};

inline constexpr double kNormEpsilon = 1e-12;

// Row-wise x / max(||x||, eps). Zero rows stay zero (guarded) and are flagged.
RowNormResult normalize_rows(const Eigen::MatrixXd& rows);

// Gradient of normalize_rows: given raw rows and upstream grad wrt the unit
// rows, returns grad wrt the raw rows.
Eigen::MatrixXd normalize_rows_backward(const Eigen::MatrixXd& raw_rows,
                                        const Eigen::MatrixXd& unit_grad);

// Adam with per-block moment state and a per-block learning-rate scale
// (mask parameters train at base rate x multiplier).
class AdamOptimizer {
 public:
  struct Block {
    double* data = nullptr;
    const double* grad = nullptr;
    Eigen::Index size = 0;
    double lr_scale = 1.0;
  };

  explicit AdamOptimizer(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  double learning_rate() const { return lr_; }

  // One bias-corrected update across all blocks. Blocks are matched to moment
  // slots by position; a size change resets that slot. Non-finite gradients
  // reject the whole step.
  void step(const std::vector<Block>& blocks);

  long step_count(std::size_t slot) const;
  void reset_slot(std::size_t slot);

 private:
  struct Slot {
    Eigen::VectorXd m, v;
    long t = 0;
  };
  double lr_, beta1_, beta2_, eps_;
  std::vector<Slot> slots_;
};

}  // namespace dcml
