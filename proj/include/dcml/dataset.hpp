#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace dcml {

struct Sample {
  Eigen::VectorXd features;
  int class_id = 0;
};

// Feature vectors with integer class labels. Immutable after construction.
// Labels live in [0, class_count); a split dataset keeps the parent's
// class_count, so label sets of sibling splits stay disjoint.
struct LabeledDataset {
  Eigen::MatrixXd features;  // n x feature_dim, one row per sample
  std::vector<int> labels;   // n entries
  int class_count = 0;

  Eigen::Index size() const { return features.rows(); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  Sample sample(Eigen::Index i) const { return {features.row(i), labels[static_cast<std::size_t>(i)]}; }

  // Distinct labels actually present, ascending.
  std::vector<int> present_classes() const;
  // Indices of samples carrying each present class, keyed by label.
  std::vector<std::vector<Eigen::Index>> indices_by_class() const;

  // Throws if labels are out of range or any present class has < 2 samples.
  void validate() const;
};

// Gaussian-mixture generator: class centers, then mode centers around them,
// then samples around mode centers. Deterministic in seed.
struct SyntheticSpec {
  int class_count = 8;
  int samples_per_class = 20;
  int feature_dim = 16;
  int mode_count_per_class = 2;
  double intra_mode_sigma = 0.1;
  double inter_class_sigma = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticDataset {
  LabeledDataset data;
  std::vector<int> mode_labels;  // generator mode index per sample, class-local
};

LabeledDataset generate_synthetic(const SyntheticSpec& spec);
// Also returns per-sample generator mode labels (mode recovery oracles).
SyntheticDataset generate_synthetic_with_modes(const SyntheticSpec& spec);

// CSV layout: class_id,feat_0,...,feat_{p-1}; optional header row (detected
// by a non-numeric first token). Throws on malformed rows (with line number),
// inconsistent dimensions, or an empty file.
LabeledDataset load_features(const std::string& path);
void save_features(const LabeledDataset& data, const std::string& path);

struct SplitResult {
  LabeledDataset train;
  LabeledDataset test;
};

// Disjoint-class split: the first ceil(train_fraction * #classes) classes in
// label order go to train. permute_seed >= 0 shuffles class order first.
SplitResult zero_shot_split(const LabeledDataset& data, double train_fraction,
                            std::int64_t permute_seed = -1);

}  // namespace dcml
