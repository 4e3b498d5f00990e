#include "dcml/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "dcml/partition.hpp"

namespace dcml {

namespace {

// Indices of the k nearest rows to `query_row` among rows (self excluded when
// self >= 0), ordered by (distance, index).
std::vector<Eigen::Index> k_nearest(const Eigen::MatrixXd& rows, const Eigen::RowVectorXd& query,
                                    Eigen::Index self, int k) {
  const Eigen::Index n = rows.rows();
  std::vector<std::pair<double, Eigen::Index>> dist;
  dist.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == self) continue;
    dist.emplace_back((rows.row(i) - query).squaredNorm(), i);
  }
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
  std::vector<Eigen::Index> out;
  out.reserve(kk);
  for (std::size_t i = 0; i < kk; ++i) out.push_back(dist[i].second);
  return out;
}

double entropy(const std::map<int, Eigen::Index>& counts, double n) {
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / n;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double recall_at_k(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels, int k) {
  const Eigen::Index n = embeddings.rows();
  if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
  if (static_cast<Eigen::Index>(k) >= n) throw std::invalid_argument("recall_at_k: k >= sample count");
  Eigen::Index hits = 0;
  for (Eigen::Index q = 0; q < n; ++q) {
    for (Eigen::Index j : k_nearest(embeddings, embeddings.row(q), q, k)) {
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(q)]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double recall_at_k(const Eigen::MatrixXd& queries, const std::vector<int>& query_labels,
                   const Eigen::MatrixXd& gallery, const std::vector<int>& gallery_labels, int k) {
  if (k < 1 || static_cast<Eigen::Index>(k) > gallery.rows()) {
    throw std::invalid_argument("recall_at_k: k outside [1, gallery size]");
  }
  Eigen::Index hits = 0;
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (Eigen::Index j : k_nearest(gallery, queries.row(q), -1, k)) {
      if (gallery_labels[static_cast<std::size_t>(j)] == query_labels[static_cast<std::size_t>(q)]) {
        ++hits;
        break;
      }
    }
  }
  return queries.rows() > 0 ? static_cast<double>(hits) / static_cast<double>(queries.rows()) : 0.0;
}

double nmi(const std::vector<int>& partition_a, const std::vector<int>& partition_b) {
  if (partition_a.size() != partition_b.size()) {
    throw std::invalid_argument("nmi: partitions must cover the same samples");
  }
  const double n = static_cast<double>(partition_a.size());
  if (partition_a.empty()) return 1.0;

  std::map<int, Eigen::Index> count_a, count_b;
  std::map<std::pair<int, int>, Eigen::Index> joint;
  for (std::size_t i = 0; i < partition_a.size(); ++i) {
    ++count_a[partition_a[i]];
    ++count_b[partition_b[i]];
    ++joint[{partition_a[i], partition_b[i]}];
  }
  const double h_a = entropy(count_a, n);
  const double h_b = entropy(count_b, n);
  if (h_a + h_b == 0.0) return 1.0;  // both single-cluster

  double mi = 0.0;
  for (const auto& [ab, c] : joint) {
    const double p_ab = static_cast<double>(c) / n;
    const double p_a = static_cast<double>(count_a[ab.first]) / n;
    const double p_b = static_cast<double>(count_b[ab.second]) / n;
    if (p_ab > 0.0) mi += p_ab * std::log(p_ab / (p_a * p_b));
  }
  return std::clamp(2.0 * mi / (h_a + h_b), 0.0, 1.0);
}

double marp(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels) {
  const Eigen::Index n = embeddings.rows();
  std::map<int, Eigen::Index> class_sizes;
  for (int c : labels) ++class_sizes[c];

  double total = 0.0;
  Eigen::Index queries = 0;
  for (Eigen::Index q = 0; q < n; ++q) {
    const int r = static_cast<int>(class_sizes[labels[static_cast<std::size_t>(q)]]) - 1;
    if (r < 1) continue;  // singleton class: excluded from the query set
    const auto ranked = k_nearest(embeddings, embeddings.row(q), q, r);
    double ap = 0.0;
    int relevant_so_far = 0;
    for (std::size_t pos = 0; pos < ranked.size(); ++pos) {
      if (labels[static_cast<std::size_t>(ranked[pos])] == labels[static_cast<std::size_t>(q)]) {
        ++relevant_so_far;
        ap += static_cast<double>(relevant_so_far) / static_cast<double>(pos + 1);
      }
    }
    total += ap / static_cast<double>(r);
    ++queries;
  }
  if (queries == 0) throw std::invalid_argument("marp: every class is a singleton");
  return total / static_cast<double>(queries);
}

int effective_dimensionality(const Eigen::MatrixXd& embeddings, double coverage,
                             bool* zero_variance) {
  if (embeddings.rows() < 2) throw std::invalid_argument("effective_dimensionality: need n >= 2");
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw std::invalid_argument("effective_dimensionality: coverage in (0, 1]");
  }
  if (zero_variance) *zero_variance = false;

  const Eigen::MatrixXd centered = embeddings.rowwise() - embeddings.colwise().mean();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(embeddings.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);  // ascending

  const double lambda_max = lambda[lambda.size() - 1];
  if (lambda_max <= 0.0) {
    if (zero_variance) *zero_variance = true;
    return 1;
  }
  // Treat numerically-zero directions as exact zeros so coverage=1 gives rank.
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < lambda_max * 1e-12) lambda[i] = 0.0;
  }
  const double total = lambda.sum();
  double cum = 0.0;
  for (Eigen::Index r = 0; r < lambda.size(); ++r) {
    cum += lambda[lambda.size() - 1 - r];
    if (cum / total >= coverage - 1e-15) return static_cast<int>(r + 1);
  }
  return static_cast<int>(lambda.size());
}

double ed_knn(const Eigen::MatrixXd& embeddings, int k) {
  const Eigen::Index n = embeddings.rows();
  if (k < 1 || static_cast<Eigen::Index>(k) >= n) {
    throw std::invalid_argument("ed_knn: need 1 <= k < n");
  }
  const Eigen::VectorXd sq_norms = embeddings.rowwise().squaredNorm();
  const Eigen::Index block = 512;
  double total = 0.0;
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index start = 0; start < n; start += block) {
    const Eigen::Index rows = std::min(block, n - start);
    // squared distances via ||x||^2 + ||y||^2 - 2 x.y
    Eigen::MatrixXd g = embeddings.middleRows(start, rows) * embeddings.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index q = start + r;
      for (Eigen::Index j = 0; j < n; ++j) {
        row[static_cast<std::size_t>(j)] = sq_norms[q] + sq_norms[j] - 2.0 * g(r, j);
      }
      row[static_cast<std::size_t>(q)] = std::numeric_limits<double>::infinity();
      std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
      double sum = 0.0;
      for (int i = 0; i < k; ++i) sum += std::sqrt(std::max(row[static_cast<std::size_t>(i)], 0.0));
      total += sum / static_cast<double>(k);
    }
  }
  return total / static_cast<double>(n);
}

ClassVarianceStats class_variance_stats(const Eigen::MatrixXd& embeddings,
                                        const std::vector<int>& labels) {
  const Eigen::Index n = embeddings.rows();
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < n; ++i) by_class[labels[static_cast<std::size_t>(i)]].push_back(i);
  if (by_class.size() < 2) throw std::invalid_argument("class_variance_stats: need >= 2 classes");
  for (const auto& [c, idx] : by_class) {
    if (idx.size() < 2) {
      throw std::invalid_argument("class_variance_stats: class " + std::to_string(c) +
                                  " has fewer than 2 samples");
    }
  }

  ClassVarianceStats out;
  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(by_class.size()), embeddings.cols());
  Eigen::Index row = 0;
  for (const auto& [c, idx] : by_class) {
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(embeddings.cols());
    for (Eigen::Index i : idx) mu += embeddings.row(i);
    mu /= static_cast<double>(idx.size());
    centroids.row(row++) = mu;
    double var = 0.0;
    for (Eigen::Index i : idx) var += (embeddings.row(i) - mu).squaredNorm();
    out.intra_var += var / static_cast<double>(idx.size());
  }
  out.intra_var /= static_cast<double>(by_class.size());

  const Eigen::RowVectorXd grand = centroids.colwise().mean();
  out.inter_var = (centroids.rowwise() - grand).rowwise().squaredNorm().mean();

  double ratio_sum = 0.0;
  for (Eigen::Index q = 0; q < n; ++q) {
    double best_same = std::numeric_limits<double>::infinity();
    double best_diff = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == q) continue;
      const double d2 = (embeddings.row(j) - embeddings.row(q)).squaredNorm();
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(q)]) {
        best_same = std::min(best_same, d2);
      } else {
        best_diff = std::min(best_diff, d2);
      }
    }
    ratio_sum += std::sqrt(best_same) / std::max(std::sqrt(best_diff), 1e-12);
  }
  out.nn_ratio = ratio_sum / static_cast<double>(n);
  return out;
}

MetricsReport evaluate_embeddings(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                                  const EvalConfig& config) {
  const Eigen::Index n = embeddings.rows();
  MetricsReport report;
  for (int k : config.recall_ks) {
    if (static_cast<Eigen::Index>(k) < n) {
      report.recall_at[k] = recall_at_k(embeddings, labels, k);
    }
  }
  std::map<int, Eigen::Index> class_sizes;
  for (int c : labels) ++class_sizes[c];
  const int n_classes = static_cast<int>(class_sizes.size());
  if (n_classes >= 1 && n >= n_classes) {
    KMeansOptions opts;
    opts.restarts = config.clustering_restarts;
    const KMeansResult clusters = kmeans(embeddings, n_classes, config.clustering_seed, opts);
    report.nmi = nmi(clusters.partition.assignment, labels);
  }
  report.marp = marp(embeddings, labels);
  report.effective_dim = effective_dimensionality(embeddings, config.ed_coverage, &report.zero_variance);
  const int edk = std::min<int>(config.ed_knn_neighbors, static_cast<int>(n) - 1);
  if (edk >= 1) {
    report.ed_k = ed_knn(embeddings, edk);
    report.ed_k_neighbors = edk;
  }
  bool degenerate = class_sizes.size() < 2;
  for (const auto& [c, s] : class_sizes) degenerate = degenerate || s < 2;
  if (!degenerate) {
    const ClassVarianceStats stats = class_variance_stats(embeddings, labels);
    report.intra_var = stats.intra_var;
    report.inter_var = stats.inter_var;
    report.nn_ratio = stats.nn_ratio;
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json recalls;
  for (const auto& [k, v] : recall_at) recalls[std::to_string(k)] = v;
  j["recall_at"] = recalls;
  j["nmi"] = nmi;
  j["marp"] = marp;
  j["effective_dim"] = effective_dim;
  j["ed_k"] = ed_k;
  j["ed_k_neighbors"] = ed_k_neighbors;
  j["intra_var"] = intra_var;
  j["inter_var"] = inter_var;
  j["nn_ratio"] = nn_ratio;
  j["zero_variance"] = zero_variance;
  return j.dump(2);
}

Eigen::MatrixXd pca_project_2d(const Eigen::MatrixXd& embeddings) {
  const Eigen::MatrixXd centered = embeddings.rowwise() - embeddings.colwise().mean();
  const Eigen::Index d = embeddings.cols();
  if (d == 1) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(embeddings.rows(), 2);
    out.col(0) = centered.col(0);
    return out;
  }
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(embeddings.rows() - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::MatrixXd basis(d, 2);
  basis.col(0) = eig.eigenvectors().col(d - 1);
  basis.col(1) = eig.eigenvectors().col(d - 2);
  // Deterministic sign: the largest-magnitude entry of each axis is positive.
  for (int c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0.0) basis.col(c) = -basis.col(c);
  }
  return centered * basis;
}

}  // namespace dcml
