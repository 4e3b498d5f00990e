#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dcml/rng.hpp"

namespace dcml {

// Depth-t assignment of samples to K clusters with parent lineage. Empty
// clusters are allowed (bisected singletons leave one empty child).
struct Partition {
  std::vector<int> assignment;  // per-sample cluster index in [0, K)
  int cluster_count = 1;
  int depth = 0;
  std::vector<int> lineage;  // per-cluster parent index at depth-1; -1 at root

  Eigen::Index size() const { return static_cast<Eigen::Index>(assignment.size()); }
  std::vector<std::vector<Eigen::Index>> members() const;
  std::vector<int> sizes() const;

  // Every sample in exactly one valid cluster; throws otherwise.
  void validate() const;

  static Partition single_cluster(Eigen::Index n);
};

struct KMeansOptions {
  int max_iterations = 100;
  int restarts = 1;
};

struct KMeansResult {
  Partition partition;
  Eigen::MatrixXd centroids;  // K x d
  double objective = 0.0;     // within-cluster sum of squared distances
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // objective after each Lloyd iteration (best restart)
};

// Lloyd iterations with farthest-point seeding (first centroid drawn from the
// seeded RNG; later restarts sweep distinct first points, then fall back to
// random subsets). Keeps the best restart by objective. Requires n >= K >= 1.
KMeansResult kmeans(const Eigen::MatrixXd& points, int cluster_count, std::uint64_t seed,
                    const KMeansOptions& options = {});

// Within-cluster sum of squared distances to cluster means.
double kmeans_objective(const Eigen::MatrixXd& points, const std::vector<int>& assignment,
                        int cluster_count);

// Splits every cluster i into children 2i and 2i+1 by 2-means on its members;
// lineage records the parent. A singleton is carried into child 2i with 2i+1
// left empty.
Partition bisect(const Partition& partition, const Eigen::MatrixXd& points, std::uint64_t seed);

// Random even bisection: each cluster's members are shuffled and halved
// (sizes within one of each other). Embeddings are ignored.
Partition bisect_random(const Partition& partition, std::uint64_t seed);

// entry (i,j) = |old_i intersect new_j| / |old_i union new_j|.
Eigen::MatrixXd iou_matrix(const Partition& old_partition, const Partition& new_partition);

// Permutation maximizing the total score, as old->new indices. Among the
// maximizers, returns the lexicographically smallest (lowest old index gets
// the lowest feasible new index first).
std::vector<int> solve_assignment(const Eigen::MatrixXd& scores);

Eigen::MatrixXi assignment_matrix(const std::vector<int>& permutation);

struct ReclusterResult {
  Partition partition;          // fresh clustering, relabeled to match old ids
  double consistency_nmi = 0.0; // NMI(old, new) across the division step
  double retained_fraction = 0.0;
};

// Fresh K-means at the old K, then cluster ids remapped by maximum-IoU linear
// assignment so subspace masks keep following their data.
ReclusterResult recluster_and_match(const Eigen::MatrixXd& embeddings, const Partition& old_partition,
                                    std::uint64_t seed, const KMeansOptions& options = {});

}  // namespace dcml
