#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dcml/dataset.hpp"
#include "dcml/embedder.hpp"
#include "dcml/losses.hpp"
#include "dcml/partition.hpp"
#include "dcml/subspace.hpp"

namespace dcml {

enum class DivisionMode { kProgressive, kNotProgressive, kRandomSplits, kLabelGrouping };

DivisionMode division_mode_from_string(const std::string& name);
std::string to_string(DivisionMode mode);
std::string to_string(MaskMode mode);
MaskMode mask_mode_from_string(const std::string& name);

struct TrainConfig {
  int k_max = 4;                    // power of two
  int epochs_between_divisions = 2; // E
  int total_epochs = 12;
  int finetune_start_epoch = -1;    // -1: never
  int batch_size = 64;
  int images_per_class = 2;         // m
  LossConfig loss;                  // kind, alpha, beta, lambda
  MaskMode mask_mode = MaskMode::kFixed;
  DivisionMode division_mode = DivisionMode::kProgressive;
  std::uint64_t seed = 1;

  // network / optimizer
  std::vector<int> hidden_dims = {64, 64};
  int embedding_dim = 32;
  double learning_rate = 1e-3;
  double mask_lr_multiplier = 100.0;
  double dropout_p = 0.0;

  // division machinery
  int cluster_restarts = 8;
  std::size_t triplet_cap = 256;
  std::vector<int> class_group_map;  // label_grouping: class id -> group id
  bool strict_checks = true;         // validate invariants after every step

  void validate(const LabeledDataset& data) const;
};

// One line of the run's event log.
struct TrainEvent {
  std::string type;  // "step" | "division" | "warn" | "phase"
  int epoch = 0;
  int step = -1;
  int cluster = -1;
  double loss = 0.0;
  std::string phase;  // "divide" | "finetune"
  double consistency_nmi = -1.0;
  double retained_fraction = -1.0;
  int cluster_count = 0;
  std::string message;

  std::string to_json() const;
};

// Runs the divide-and-conquer schedule: per-cluster batches with masked
// distances, division (recluster + bisect + mask split) every E epochs,
// optional conquered-mask fine-tuning.
class Trainer {
 public:
  Trainer(TrainConfig config, LabeledDataset train_data);

  // Called after every completed epoch (1-based).
  using EpochCallback = std::function<void(const Trainer&, int epoch)>;

  void run(const EpochCallback& on_epoch = {});
  void train_epoch();
  void division_step();

  int epoch() const { return epoch_; }
  bool finetuning() const { return finetuning_; }
  const TrainConfig& config() const { return config_; }
  const LabeledDataset& data() const { return data_; }
  const EmbeddingNetwork& network() const { return net_; }
  EmbeddingNetwork& network() { return net_; }
  const MaskSet& masks() const { return masks_; }
  const Partition& partition() const { return partition_; }
  const std::vector<TrainEvent>& events() const { return events_; }
  double last_epoch_mean_loss() const { return last_epoch_mean_loss_; }

  // Raw embeddings of the whole training set, full space, row-normalized
  // (the representation used for clustering).
  Eigen::MatrixXd full_space_unit_embeddings() const;

  struct ClusterBatch {
    int cluster = -1;
    std::vector<Eigen::Index> indices;
  };
  ClusterBatch sample_cluster_batch();

 private:
  void init_partition_and_masks();
  void step(const ClusterBatch& batch);
  void enter_finetune_phase();
  void check_invariants() const;

  TrainConfig config_;
  LabeledDataset data_;
  EmbeddingNetwork net_;
  MaskSet masks_;
  Partition partition_;
  AdamOptimizer optimizer_;
  Rng batch_rng_;
  Rng mine_rng_;
  Rng cluster_rng_;
  Rng dropout_rng_;
  int epoch_ = 0;
  Eigen::Index step_in_epoch_ = 0;
  bool finetuning_ = false;
  double epoch_loss_sum_ = 0.0;
  double last_epoch_mean_loss_ = 0.0;
  std::vector<TrainEvent> events_;
};

// Value and exact gradients of the per-step objective: batch loss on masked
// unit embeddings, plus lambda * mask orthogonality in learnable (non-
// conquered) training. mask_grads is zero for fixed masks.
struct ObjectiveResult {
  double value = 0.0;
  EmbeddingNetwork::Gradients net_grads;
  Eigen::MatrixXd mask_grads;
  bool loss_empty = false;
};

ObjectiveResult objective_from_forward(const EmbeddingNetwork& net,
                                       const EmbeddingNetwork::ForwardCache& cache,
                                       const Eigen::MatrixXd& raw_embeddings, const MaskSet& masks,
                                       int cluster, bool use_conquered,
                                       const std::vector<int>& labels, const LossConfig& loss_config,
                                       std::size_t cap, Rng& rng);

ObjectiveResult total_objective(const EmbeddingNetwork& net, const MaskSet& masks, int cluster,
                                bool use_conquered, const Eigen::MatrixXd& batch,
                                const std::vector<int>& labels, const LossConfig& loss_config,
                                std::size_t cap, Rng& rng);

// Batch with m samples per class drawn from the given member pool; falls back
// to uniform draws when the pool has too few multi-sample classes. Exposed for
// the single-space reference trainer used in tests.
std::vector<Eigen::Index> draw_class_balanced_batch(const std::vector<Eigen::Index>& pool,
                                                    const std::vector<int>& labels,
                                                    int batch_size, int per_class, Rng& rng);

// Checkpoint: network layers + masks, JSON with a version tag.
std::string checkpoint_to_json(const EmbeddingNetwork& net, const MaskSet& masks);
void checkpoint_from_json(const std::string& text, EmbeddingNetwork& net, MaskSet& masks);
void save_checkpoint(const EmbeddingNetwork& net, const MaskSet& masks, const std::string& path);
void load_checkpoint(const std::string& path, EmbeddingNetwork& net, MaskSet& masks);

// Embeds a dataset with the given network and applies the conquered mask
// (subspace < 0) or a single subspace mask, then row-normalizes.
Eigen::MatrixXd embed_for_eval(const EmbeddingNetwork& net, const MaskSet& masks,
                               const Eigen::MatrixXd& features, int subspace = -1);

}  // namespace dcml
