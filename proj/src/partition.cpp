#include "dcml/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dcml/eval.hpp"

namespace dcml {

std::vector<std::vector<Eigen::Index>> Partition::members() const {
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(cluster_count));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    out[static_cast<std::size_t>(assignment[i])].push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::vector<int> Partition::sizes() const {
  std::vector<int> out(static_cast<std::size_t>(cluster_count), 0);
  for (int a : assignment) ++out[static_cast<std::size_t>(a)];
  return out;
}

void Partition::validate() const {
  if (cluster_count < 1) throw std::logic_error("partition: cluster_count must be >= 1");
  for (int a : assignment) {
    if (a < 0 || a >= cluster_count) {
      throw std::logic_error("partition: assignment outside [0, K)");
    }
  }
  if (!lineage.empty() && static_cast<int>(lineage.size()) != cluster_count) {
    throw std::logic_error("partition: lineage size != K");
  }
}

Partition Partition::single_cluster(Eigen::Index n) {
  Partition p;
  p.assignment.assign(static_cast<std::size_t>(n), 0);
  p.cluster_count = 1;
  p.depth = 0;
  p.lineage = {-1};
  return p;
}

double kmeans_objective(const Eigen::MatrixXd& points, const std::vector<int>& assignment,
                        int cluster_count) {
  const Eigen::Index d = points.cols();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(cluster_count, d);
  std::vector<int> counts(static_cast<std::size_t>(cluster_count), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sums.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
    ++counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
  }
  double obj = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int k = assignment[static_cast<std::size_t>(i)];
    const Eigen::RowVectorXd mean = sums.row(k) / std::max(counts[static_cast<std::size_t>(k)], 1);
    obj += (points.row(i) - mean).squaredNorm();
  }
  return obj;
}

namespace {

// One Lloyd run from the given initial centroids.
struct LloydRun {
  std::vector<int> assignment;
  Eigen::MatrixXd centroids;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

LloydRun lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, int max_iterations) {
  const Eigen::Index n = points.rows();
  const int k = static_cast<int>(centroids.rows());
  LloydRun run;
  run.assignment.assign(static_cast<std::size_t>(n), 0);

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = (iter == 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d2 = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d2 < best_d) {
          best_d = d2;
          best = c;
        }
      }
      if (run.assignment[static_cast<std::size_t>(i)] != best) {
        run.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    run.iterations = iter + 1;
    run.objective_trace.push_back(kmeans_objective(points, run.assignment, k));
    if (!changed) {
      run.converged = true;
      break;
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(run.assignment[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(run.assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      }
    }
    // Empty-cluster repair: seed each empty cluster with the point farthest
    // from its own centroid (donors must keep at least 2 members).
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far_i = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int owner = run.assignment[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(owner)] < 2) continue;
        const double d2 = (points.row(i) - centroids.row(owner)).squaredNorm();
        if (d2 > far_d) {
          far_d = d2;
          far_i = i;
        }
      }
      if (far_i < 0) continue;  // all donors exhausted (n close to K)
      const int owner = run.assignment[static_cast<std::size_t>(far_i)];
      --counts[static_cast<std::size_t>(owner)];
      ++counts[static_cast<std::size_t>(c)];
      run.assignment[static_cast<std::size_t>(far_i)] = c;
      centroids.row(c) = points.row(far_i);
    }
  }

  run.centroids = std::move(centroids);
  run.objective = kmeans_objective(points, run.assignment, k);
  return run;
}

Eigen::MatrixXd farthest_point_seed(const Eigen::MatrixXd& points, int k, Eigen::Index first) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(first);
  Eigen::VectorXd min_d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index far_i = 0;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (min_d2[i] > far_d) {
        far_d = min_d2[i];
        far_i = i;
      }
    }
    centroids.row(c) = points.row(far_i);
    for (Eigen::Index i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int cluster_count, std::uint64_t seed,
                    const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (cluster_count < 1) throw std::invalid_argument("kmeans: K must be >= 1");
  if (n < cluster_count) {
    throw std::invalid_argument("kmeans: n=" + std::to_string(n) + " < K=" +
                                std::to_string(cluster_count));
  }
  if (!points.allFinite()) throw std::invalid_argument("kmeans: non-finite points");

  Rng rng = make_rng(seed, 3);
  std::vector<Eigen::Index> first_sweep(static_cast<std::size_t>(n));
  std::iota(first_sweep.begin(), first_sweep.end(), 0);
  shuffle_in_place(first_sweep, rng);

  LloydRun best;
  bool have_best = false;
  const int restarts = std::max(options.restarts, 1);
  for (int r = 0; r < restarts; ++r) {
    Eigen::MatrixXd init;
    if (r < static_cast<int>(n)) {
      init = farthest_point_seed(points, cluster_count, first_sweep[static_cast<std::size_t>(r)]);
    } else {
      // All first points exhausted; fall back to a random distinct subset.
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      idx = sample_without_replacement(std::move(idx), static_cast<std::size_t>(cluster_count), rng);
      init.resize(cluster_count, points.cols());
      for (int c = 0; c < cluster_count; ++c) init.row(c) = points.row(idx[static_cast<std::size_t>(c)]);
    }
    LloydRun run = lloyd(points, std::move(init), options.max_iterations);
    if (!have_best || run.objective < best.objective) {
      best = std::move(run);
      have_best = true;
    }
  }

  KMeansResult out;
  out.partition.assignment = std::move(best.assignment);
  out.partition.cluster_count = cluster_count;
  out.partition.depth = 0;
  out.partition.lineage.assign(static_cast<std::size_t>(cluster_count), -1);
  out.centroids = std::move(best.centroids);
  out.objective = best.objective;
  out.iterations = best.iterations;
  out.converged = best.converged;
  out.objective_trace = std::move(best.objective_trace);
  return out;
}

Partition bisect(const Partition& partition, const Eigen::MatrixXd& points, std::uint64_t seed) {
  if (partition.size() != points.rows()) {
    throw std::invalid_argument("bisect: partition/point count mismatch");
  }
  Partition next;
  next.assignment.assign(partition.assignment.size(), 0);
  next.cluster_count = 2 * partition.cluster_count;
  next.depth = partition.depth + 1;
  next.lineage.resize(static_cast<std::size_t>(next.cluster_count));
  for (int i = 0; i < partition.cluster_count; ++i) {
    next.lineage[static_cast<std::size_t>(2 * i)] = i;
    next.lineage[static_cast<std::size_t>(2 * i + 1)] = i;
  }

  const auto members = partition.members();
  for (int i = 0; i < partition.cluster_count; ++i) {
    const auto& idx = members[static_cast<std::size_t>(i)];
    if (idx.empty()) continue;
    if (idx.size() == 1) {
      // Singleton: duplicated into child 2i; child 2i+1 stays empty.
      next.assignment[static_cast<std::size_t>(idx[0])] = 2 * i;
      continue;
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()), points.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = points.row(idx[r]);
    KMeansOptions opts;
    opts.restarts = 4;
    const KMeansResult split = kmeans(sub, 2, mix_seed(seed, static_cast<std::uint64_t>(i)), opts);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      next.assignment[static_cast<std::size_t>(idx[r])] =
          2 * i + split.partition.assignment[r];
    }
  }
  return next;
}

Partition bisect_random(const Partition& partition, std::uint64_t seed) {
  Partition next;
  next.assignment.assign(partition.assignment.size(), 0);
  next.cluster_count = 2 * partition.cluster_count;
  next.depth = partition.depth + 1;
  next.lineage.resize(static_cast<std::size_t>(next.cluster_count));
  for (int i = 0; i < partition.cluster_count; ++i) {
    next.lineage[static_cast<std::size_t>(2 * i)] = i;
    next.lineage[static_cast<std::size_t>(2 * i + 1)] = i;
  }
  const auto members = partition.members();
  for (int i = 0; i < partition.cluster_count; ++i) {
    auto idx = members[static_cast<std::size_t>(i)];
    if (idx.empty()) continue;
    Rng rng = make_rng(seed, 100 + static_cast<std::uint64_t>(i));
    shuffle_in_place(idx, rng);
    const std::size_t half = (idx.size() + 1) / 2;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      next.assignment[static_cast<std::size_t>(idx[r])] = 2 * i + (r < half ? 0 : 1);
    }
  }
  return next;
}

Eigen::MatrixXd iou_matrix(const Partition& old_partition, const Partition& new_partition) {
  if (old_partition.size() != new_partition.size()) {
    throw std::invalid_argument("iou_matrix: sample count mismatch");
  }
  if (old_partition.cluster_count != new_partition.cluster_count) {
    throw std::invalid_argument("iou_matrix: cluster count mismatch");
  }
  const int k = old_partition.cluster_count;
  Eigen::MatrixXd inter = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t s = 0; s < old_partition.assignment.size(); ++s) {
    inter(old_partition.assignment[s], new_partition.assignment[s]) += 1.0;
  }
  const std::vector<int> old_sizes = old_partition.sizes();
  const std::vector<int> new_sizes = new_partition.sizes();
  Eigen::MatrixXd iou(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double uni = old_sizes[static_cast<std::size_t>(i)] +
                         new_sizes[static_cast<std::size_t>(j)] - inter(i, j);
      iou(i, j) = uni > 0.0 ? inter(i, j) / uni : 0.0;
    }
  }
  return iou;
}

namespace {

// Jonker-Volgenant shortest augmenting path, minimizing total cost.
// Returns row -> column and the optimal total.
std::pair<std::vector<int>, double> jv_min_cost(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  const double inf = std::numeric_limits<double>::infinity();

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> rowsol(static_cast<std::size_t>(n), -1);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) {
      rowsol[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
      total += cost(p[static_cast<std::size_t>(j)] - 1, j - 1);
    }
  }
  return {rowsol, total};
}

// Best achievable total score of a full assignment on the score submatrix
// given by (rows, cols).
double best_completion_score(const Eigen::MatrixXd& scores, const std::vector<int>& rows,
                             const std::vector<int>& cols) {
  const int m = static_cast<int>(rows.size());
  if (m == 0) return 0.0;
  Eigen::MatrixXd sub(m, m);
  double max_s = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      sub(a, b) = scores(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
      max_s = std::max(max_s, sub(a, b));
    }
  }
  const Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(m, m, max_s) - sub;
  const auto [sol, total_cost] = jv_min_cost(cost);
  return static_cast<double>(m) * max_s - total_cost;
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& scores) {
  if (scores.rows() != scores.cols()) {
    throw std::invalid_argument("solve_assignment: matrix must be square");
  }
  if (!scores.allFinite()) throw std::invalid_argument("solve_assignment: non-finite scores");
  const int k = static_cast<int>(scores.rows());
  if (k == 0) return {};

  std::vector<int> all_rows(static_cast<std::size_t>(k)), all_cols(static_cast<std::size_t>(k));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  const double best_total = best_completion_score(scores, all_rows, all_cols);
  const double tol = 1e-9 * std::max(1.0, std::abs(best_total));

  // Fix rows in order, taking for each the lowest column that still allows an
  // optimal completion: the lexicographically smallest maximizer.
  std::vector<int> result(static_cast<std::size_t>(k), -1);
  std::vector<char> used(static_cast<std::size_t>(k), 0);
  double prefix = 0.0;
  for (int i = 0; i < k; ++i) {
    std::vector<int> rest_rows;
    for (int r = i + 1; r < k; ++r) rest_rows.push_back(r);
    for (int j = 0; j < k; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      std::vector<int> rest_cols;
      for (int c = 0; c < k; ++c) {
        if (!used[static_cast<std::size_t>(c)] && c != j) rest_cols.push_back(c);
      }
      const double total = prefix + scores(i, j) + best_completion_score(scores, rest_rows, rest_cols);
      if (total >= best_total - tol) {
        result[static_cast<std::size_t>(i)] = j;
        used[static_cast<std::size_t>(j)] = 1;
        prefix += scores(i, j);
        break;
      }
    }
    if (result[static_cast<std::size_t>(i)] < 0) {
      throw std::logic_error("solve_assignment: no feasible column (tolerance too tight)");
    }
  }
  return result;
}

Eigen::MatrixXi assignment_matrix(const std::vector<int>& permutation) {
  const int k = static_cast<int>(permutation.size());
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(k, k);
  for (int i = 0; i < k; ++i) a(i, permutation[static_cast<std::size_t>(i)]) = 1;
  return a;
}

ReclusterResult recluster_and_match(const Eigen::MatrixXd& embeddings, const Partition& old_partition,
                                    std::uint64_t seed, const KMeansOptions& options) {
  const KMeansResult fresh = kmeans(embeddings, old_partition.cluster_count, seed, options);
  const Eigen::MatrixXd iou = iou_matrix(old_partition, fresh.partition);
  const std::vector<int> old_to_new = solve_assignment(iou);

  std::vector<int> new_to_old(old_to_new.size());
  for (std::size_t i = 0; i < old_to_new.size(); ++i) {
    new_to_old[static_cast<std::size_t>(old_to_new[i])] = static_cast<int>(i);
  }

  ReclusterResult out;
  out.partition.assignment.resize(fresh.partition.assignment.size());
  for (std::size_t s = 0; s < fresh.partition.assignment.size(); ++s) {
    out.partition.assignment[s] = new_to_old[static_cast<std::size_t>(fresh.partition.assignment[s])];
  }
  out.partition.cluster_count = old_partition.cluster_count;
  out.partition.depth = old_partition.depth;
  out.partition.lineage = old_partition.lineage;

  out.consistency_nmi = nmi(old_partition.assignment, out.partition.assignment);
  Eigen::Index same = 0;
  for (std::size_t s = 0; s < out.partition.assignment.size(); ++s) {
    if (out.partition.assignment[s] == old_partition.assignment[s]) ++same;
  }
  out.retained_fraction = out.partition.assignment.empty()
                              ? 0.0
                              : static_cast<double>(same) / static_cast<double>(out.partition.assignment.size());
  return out;
}

}  // namespace dcml
