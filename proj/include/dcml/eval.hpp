#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dcml {

// One evaluation pass over an embedded dataset.
struct MetricsReport {
  std::map<int, double> recall_at;  // k -> value
  double nmi = 0.0;                 // K-means clusters vs ground-truth labels
  double marp = 0.0;
  int effective_dim = 1;
  double ed_k = 0.0;  // mean distance to the k nearest neighbors
  int ed_k_neighbors = 10;
  double intra_var = 0.0;
  double inter_var = 0.0;
  double nn_ratio = 0.0;
  bool zero_variance = false;

  std::string to_json() const;
};

// Fraction of queries whose k nearest neighbors (self excluded, ties by
// sample index) include a same-class sample. Exact brute force.
double recall_at_k(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels, int k);

// Query/gallery protocol: neighbors are drawn from the gallery only.
double recall_at_k(const Eigen::MatrixXd& queries, const std::vector<int>& query_labels,
                   const Eigen::MatrixXd& gallery, const std::vector<int>& gallery_labels, int k);

// Normalized mutual information 2 I(A,B) / (H(A)+H(B)), natural log. Two
// single-cluster partitions give 1 (0/0 convention).
double nmi(const std::vector<int>& partition_a, const std::vector<int>& partition_b);

// Mean average precision at R where R = (query class size - 1). Singleton
// classes are excluded from the query set.
double marp(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels);

// Smallest number of principal components covering `coverage` of the total
// embedding variance. Zero total variance gives 1 (flag via pointer).
int effective_dimensionality(const Eigen::MatrixXd& embeddings, double coverage = 0.95,
                             bool* zero_variance = nullptr);

// Mean over samples of the mean distance to the k nearest neighbors.
double ed_knn(const Eigen::MatrixXd& embeddings, int k);

struct ClassVarianceStats {
  double intra_var = 0.0;  // mean within-class variance (mean squared deviation)
  double inter_var = 0.0;  // variance of class centroids
  double nn_ratio = 0.0;   // E[nearest same-class dist / nearest other-class dist]
};

ClassVarianceStats class_variance_stats(const Eigen::MatrixXd& embeddings,
                                        const std::vector<int>& labels);

struct EvalConfig {
  std::vector<int> recall_ks = {1, 2, 4, 8};
  int ed_knn_neighbors = 10;
  double ed_coverage = 0.95;
  std::uint64_t clustering_seed = 12345;  // for the NMI K-means
  int clustering_restarts = 4;
};

// Full report; the NMI clustering uses K = number of present classes.
MetricsReport evaluate_embeddings(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                                  const EvalConfig& config = {});

// n x 2 coordinates on the top-2 principal components.
Eigen::MatrixXd pca_project_2d(const Eigen::MatrixXd& embeddings);

}  // namespace dcml
