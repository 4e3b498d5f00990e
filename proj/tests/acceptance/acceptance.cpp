// Acceptance suite. Each numbered criterion prints one PASS/FAIL line; the
// exit code is the number of failures. Run with no arguments for all
// criteria, or pass criterion numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dcml/dataset.hpp"
#include "dcml/embedder.hpp"
#include "dcml/eval.hpp"
#include "dcml/experiment.hpp"
#include "dcml/losses.hpp"
#include "dcml/partition.hpp"
#include "dcml/subspace.hpp"
#include "dcml/trainer.hpp"
#include "oracles.hpp"
#include "reference_trainer.hpp"

using namespace dcml;
namespace fs = std::filesystem;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  }
  return m;
}

// ---------------------------------------------------------------------------
// 1. gradient suite
// ---------------------------------------------------------------------------

struct GradInstance {
  EmbeddingNetwork net;
  MaskSet masks;
  Eigen::MatrixXd x;
  std::vector<int> labels;
  int cluster = 0;
  LossConfig loss;
};

bool hinge_near_kink(const GradInstance& in) {
  const Eigen::MatrixXd raw = in.net.forward(in.x);
  const Eigen::VectorXd mask = in.masks.raw.row(in.cluster).transpose();
  const MaskedUnitRows mu = masked_unit_rows(raw, mask);
  if (mu.masked.rowwise().norm().minCoeff() < 1e-3) return true;  // ill-conditioned normalize

  Rng unused = make_rng(0);
  if (in.loss.kind == LossKind::kTriplet) {
    for (const Triplet& t : mine_triplets(in.labels, 0, unused)) {
      const double pre = (mu.unit.row(t.anchor) - mu.unit.row(t.positive)).squaredNorm() -
                         (mu.unit.row(t.anchor) - mu.unit.row(t.negative)).squaredNorm() +
                         in.loss.alpha;
      if (std::abs(pre) < 1e-3) return true;
    }
  }
  if (in.loss.kind == LossKind::kMargin) {
    for (const LabeledPair& p : mine_pairs(in.labels, 0, unused)) {
      const double d = (mu.unit.row(p.i) - mu.unit.row(p.j)).norm();
      const double pre = in.loss.alpha + (p.positive ? 1.0 : -1.0) * (d - in.loss.beta);
      if (std::abs(pre) < 1e-3 || d < 1e-3) return true;
    }
  }
  return false;
}

GradInstance make_grad_instance(LossKind kind, MaskMode mode, std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = make_rng(seed + 1000 * attempt, 70);
    GradInstance in;
    const int dims[] = {4, 6, 8};
    const int d = dims[seed % 3];
    const int k_options_fixed[] = {1, 2, 2};
    const int k_options_learn[] = {1, 2, 4};
    const int k = mode == MaskMode::kFixed ? k_options_fixed[(seed / 3) % 3]
                                           : k_options_learn[(seed / 3) % 3];
    in.net = EmbeddingNetwork(5, {6}, d, mix_seed(seed, 71));
    if (mode == MaskMode::kFixed) {
      in.masks = init_fixed_orthogonal(d, k);
    } else {
      in.masks = init_learnable_replicated(d, k, 0);
      std::uniform_real_distribution<double> mag(0.25, 1.25);
      std::bernoulli_distribution neg(0.3);
      for (Eigen::Index i = 0; i < in.masks.raw.rows(); ++i) {
        for (Eigen::Index j = 0; j < in.masks.raw.cols(); ++j) {
          in.masks.raw(i, j) = (neg(rng) ? -1.0 : 1.0) * mag(rng);
        }
      }
    }
    const int batch = 12;
    in.x = random_matrix(batch, 5, rng);
    in.labels.resize(batch);
    for (int i = 0; i < batch; ++i) in.labels[static_cast<std::size_t>(i)] = i / 3;  // 4 classes x 3
    in.cluster = static_cast<int>(seed % static_cast<std::uint64_t>(k));
    in.loss.kind = kind;
    in.loss.alpha = 0.2;
    in.loss.beta = 1.2;
    in.loss.lambda = (mode == MaskMode::kLearnable && k >= 2) ? 0.37 : 0.0;
    if (!hinge_near_kink(in)) return in;
  }
}

bool criterion_1() {
  const double started = now_seconds();
  const LossKind kinds[] = {LossKind::kTriplet, LossKind::kMargin, LossKind::kNPairs,
                            LossKind::kSoftTriplet};
  const MaskMode modes[] = {MaskMode::kLearnable, MaskMode::kFixed};
  double worst = 0.0;
  int instances = 0;
  for (LossKind kind : kinds) {
    for (MaskMode mode : modes) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GradInstance in = make_grad_instance(kind, mode, seed);
        Rng unused = make_rng(0);
        const ObjectiveResult analytic = total_objective(
            in.net, in.masks, in.cluster, false, in.x, in.labels, in.loss, 0, unused);

        std::vector<double> flat_analytic;
        std::vector<double*> params;
        for (std::size_t l = 0; l < in.net.layer_count(); ++l) {
          auto& layer = in.net.layer(l);
          for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
            params.push_back(layer.weight.data() + i);
            flat_analytic.push_back(analytic.net_grads.weight[l].data()[i]);
          }
          for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            params.push_back(layer.bias.data() + i);
            flat_analytic.push_back(analytic.net_grads.bias[l].data()[i]);
          }
        }
        if (mode == MaskMode::kLearnable) {
          for (Eigen::Index i = 0; i < in.masks.raw.size(); ++i) {
            params.push_back(in.masks.raw.data() + i);
            flat_analytic.push_back(analytic.mask_grads.data()[i]);
          }
        }

        auto value = [&]() {
          Rng r = make_rng(0);
          return total_objective(in.net, in.masks, in.cluster, false, in.x, in.labels, in.loss, 0, r)
              .value;
        };
        const std::vector<double> fd = oracle::fd_gradient(value, params, 1e-6);
        const double err = oracle::grad_rel_error(flat_analytic, fd);
        worst = std::max(worst, err);
        ++instances;
        if (err >= 1e-4) {
          std::printf("    gradient mismatch: loss=%s masks=%s seed=%llu rel_err=%.3g\n",
                      to_string(kind).c_str(), to_string(mode).c_str(),
                      static_cast<unsigned long long>(seed), err);
          return false;
        }
      }
    }
  }
  const double elapsed = now_seconds() - started;
  std::printf("    %d instances, worst rel err %.3g, %.1fs\n", instances, worst, elapsed);
  return worst < 1e-4 && elapsed < 30.0;
}

// ---------------------------------------------------------------------------
// 2. uniform-sphere kNN distance constants
// ---------------------------------------------------------------------------

bool criterion_2() {
  const double started = now_seconds();
  Rng rng = make_rng(20260810);
  Eigen::MatrixXd u = random_matrix(10000, 512, rng);
  u = normalize_rows(u).unit;
  const double ed10 = ed_knn(u, 10);
  const double ed1 = ed_knn(u, 1);
  const double elapsed = now_seconds() - started;
  std::printf("    ed_10=%.4f (want 1.290 +/- 0.02), ed_1=%.4f (want 1.275 +/- 0.02), %.1fs\n",
              ed10, ed1, elapsed);
  return std::abs(ed10 - 1.290) <= 0.02 && std::abs(ed1 - 1.275) <= 0.02 && elapsed < 60.0;
}

// ---------------------------------------------------------------------------
// 3. oracle equivalence (kmeans, assignment, retrieval metrics)
// ---------------------------------------------------------------------------

bool criterion_3() {
  // exhaustive K-means optimum, n <= 10, K <= 3, 20 restarts
  KMeansOptions opts;
  opts.restarts = 20;
  int kmeans_checked = 0;
  for (int k = 1; k <= 3; ++k) {
    for (Eigen::Index n = k; n <= 10; ++n) {
      for (std::uint64_t seed = 1; seed <= 2; ++seed) {
        Rng rng = make_rng(seed * 100 + static_cast<std::uint64_t>(n), 80 + static_cast<std::uint64_t>(k));
        const Eigen::MatrixXd pts = random_matrix(n, 3, rng);
        const double got = kmeans(pts, k, seed, opts).objective;
        const double want = oracle::best_partition_objective(pts, k);
        ++kmeans_checked;
        if (std::abs(got - want) > 1e-9) {
          std::printf("    kmeans missed optimum: n=%d K=%d got=%.12f want=%.12f\n",
                      static_cast<int>(n), k, got, want);
          return false;
        }
      }
    }
  }

  // linear assignment vs permutation enumeration
  Rng rng = make_rng(33);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 6;
    Eigen::MatrixXd scores(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) scores(i, j) = uniform(rng);
    }
    const auto got = solve_assignment(scores);
    const auto [want, want_score] = oracle::best_permutation(scores);
    double got_score = 0.0;
    for (int i = 0; i < k; ++i) got_score += scores(i, got[static_cast<std::size_t>(i)]);
    if (got != want || std::abs(got_score - want_score) > 1e-12) {
      std::printf("    assignment mismatch at trial %d (K=%d)\n", trial, k);
      return false;
    }
  }

  // metrics vs brute-force re-implementations, exact to 1e-12
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng mrng = make_rng(seed, 90);
    const Eigen::MatrixXd emb = random_matrix(20, 4, mrng);
    std::vector<int> labels(20);
    for (int i = 0; i < 20; ++i) labels[static_cast<std::size_t>(i)] = i % 4;
    shuffle_in_place(labels, mrng);

    for (int k : {1, 3, 5}) {
      if (std::abs(recall_at_k(emb, labels, k) - oracle::recall_at_k(emb, labels, k)) > 1e-12) {
        std::printf("    recall mismatch seed=%llu k=%d\n", static_cast<unsigned long long>(seed), k);
        return false;
      }
    }
    if (std::abs(marp(emb, labels) - oracle::marp(emb, labels)) > 1e-12) {
      std::printf("    marp mismatch seed=%llu\n", static_cast<unsigned long long>(seed));
      return false;
    }
    std::vector<int> other(20);
    for (auto& v : other) v = static_cast<int>(uniform_index(mrng, 3));
    if (std::abs(nmi(labels, other) - oracle::nmi(labels, other)) > 1e-12) {
      std::printf("    nmi mismatch seed=%llu\n", static_cast<unsigned long long>(seed));
      return false;
    }
  }
  std::printf("    kmeans instances=%d, 100 assignments, 50 metric instances\n", kmeans_checked);
  return true;
}

// ---------------------------------------------------------------------------
// 4. conquer identity for fixed orthogonal masks
// ---------------------------------------------------------------------------

bool criterion_4() {
  Rng rng = make_rng(44);
  const Eigen::MatrixXd emb = random_matrix(24, 32, rng);
  for (int k : {1, 2, 4, 8, 16, 32}) {
    const MaskSet masks = init_fixed_orthogonal(32, k);
    if (masks.conquer() != Eigen::VectorXd::Ones(32)) {
      std::printf("    conquered mask is not all-ones at K=%d\n", k);
      return false;
    }
    const Eigen::MatrixXd conquered = masked_unit_rows(emb, masks.conquer()).unit;
    const Eigen::MatrixXd full = normalize_rows(emb).unit;
    if (conquered != full) {
      std::printf("    conquered distances differ from full space at K=%d\n", k);
      return false;
    }
  }

  // L_s stays identically zero through a fixed-mask training run
  SyntheticSpec spec;
  spec.class_count = 8;
  spec.samples_per_class = 12;
  spec.feature_dim = 10;
  spec.seed = 4;
  TrainConfig config;
  config.k_max = 4;
  config.epochs_between_divisions = 1;
  config.total_epochs = 5;
  config.batch_size = 16;
  config.hidden_dims = {16};
  config.embedding_dim = 8;
  config.mask_mode = MaskMode::kFixed;
  config.seed = 4;
  Trainer trainer(config, generate_synthetic(spec));
  bool orthogonal_everywhere = true;
  trainer.run([&](const Trainer& t, int) {
    if (t.masks().count() >= 2) {
      orthogonal_everywhere =
          orthogonal_everywhere && mask_orthogonality_loss(t.masks().raw).value == 0.0;
    }
  });
  if (!orthogonal_everywhere) {
    std::printf("    L_s deviated from zero during fixed-mask training\n");
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 5. baseline equivalence at K_max = 1
// ---------------------------------------------------------------------------

bool criterion_5() {
  SyntheticSpec spec;
  spec.class_count = 10;
  spec.samples_per_class = 12;
  spec.feature_dim = 12;
  spec.mode_count_per_class = 2;
  spec.intra_mode_sigma = 0.1;
  spec.inter_class_sigma = 1.0;
  spec.seed = 55;
  const LabeledDataset data = generate_synthetic(spec);

  TrainConfig config;
  config.k_max = 1;
  config.epochs_between_divisions = 2;
  config.total_epochs = 6;
  config.batch_size = 20;
  config.hidden_dims = {24, 24};
  config.embedding_dim = 16;
  config.mask_mode = MaskMode::kFixed;
  config.seed = 55;

  Trainer trainer(config, data);
  trainer.run();
  const EmbeddingNetwork reference = testsupport::plain_single_space_train(config, data);
  if (!testsupport::networks_bitwise_equal(trainer.network(), reference)) {
    std::printf("    parameter trajectories diverged\n");
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 6. end-to-end directional claim
// ---------------------------------------------------------------------------

double binomial_tail_at_least(int wins, int n) {
  double total = 0.0;
  for (int i = wins; i <= n; ++i) {
    double c = 1.0;
    for (int j = 0; j < i; ++j) c = c * (n - j) / (j + 1);
    total += c;
  }
  return total / std::pow(2.0, n);
}

struct DirectionalStats {
  double mean_a = 0.0, mean_b = 0.0;
  int wins = 0, ties = 0, n = 0;
  double p_value = 1.0;
};

DirectionalStats paired_sign_test(const std::vector<double>& a, const std::vector<double>& b) {
  DirectionalStats s;
  s.n = static_cast<int>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.mean_a += a[i];
    s.mean_b += b[i];
    if (a[i] > b[i]) ++s.wins;
    if (a[i] == b[i]) ++s.ties;
  }
  s.mean_a /= s.n;
  s.mean_b /= s.n;
  const int effective = s.n - s.ties;
  s.p_value = effective > 0 ? binomial_tail_at_least(s.wins, effective) : 1.0;
  return s;
}

bool criterion_6() {
  const double started = now_seconds();
  const int n_seeds = 12;

  // Heavily-overlapping modes and a long margin-loss run: the single-space
  // baseline memorizes the training classes and its held-out recall decays,
  // while the progressive division keeps same-mode positives together and
  // resists the decay.
  auto run_mode = [&](DivisionMode mode, int k_max, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.class_count = 32;
    spec.samples_per_class = 50;
    spec.feature_dim = 20;
    spec.mode_count_per_class = 2;
    spec.intra_mode_sigma = 1.2;
    spec.inter_class_sigma = 1.0;
    spec.seed = seed;
    const LabeledDataset full = generate_synthetic(spec);
    const SplitResult split = zero_shot_split(full, 0.5);

    TrainConfig config;
    config.k_max = k_max;
    config.division_mode = mode;
    config.epochs_between_divisions = 2;
    config.total_epochs = 100;
    config.batch_size = 64;
    config.images_per_class = 2;
    config.loss.kind = LossKind::kMargin;
    config.loss.alpha = 0.2;
    config.loss.beta = 1.2;
    config.hidden_dims = {64, 64};
    config.embedding_dim = 32;
    config.learning_rate = 1e-3;
    config.mask_mode = MaskMode::kFixed;
    config.seed = seed;
    config.strict_checks = false;

    Trainer trainer(config, split.train);
    trainer.run();
    const Eigen::MatrixXd test_emb =
        embed_for_eval(trainer.network(), trainer.masks(), split.test.features);
    return recall_at_k(test_emb, split.test.labels, 1);
  };

  std::vector<double> progressive, baseline, random_splits;
  for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
    progressive.push_back(run_mode(DivisionMode::kProgressive, 4, seed));
    baseline.push_back(run_mode(DivisionMode::kProgressive, 1, seed));
    random_splits.push_back(run_mode(DivisionMode::kRandomSplits, 4, seed));
  }

  const DirectionalStats vs_base = paired_sign_test(progressive, baseline);
  const DirectionalStats vs_random = paired_sign_test(progressive, random_splits);
  const double elapsed = now_seconds() - started;
  std::printf("    R@1 progressive=%.4f baseline=%.4f random=%.4f over %d seeds\n",
              vs_base.mean_a, vs_base.mean_b, vs_random.mean_b, n_seeds);
  std::printf("    vs baseline: %d wins / %d ties, p=%.4f; vs random: %d wins / %d ties, p=%.4f; %.0fs\n",
              vs_base.wins, vs_base.ties, vs_base.p_value, vs_random.wins, vs_random.ties,
              vs_random.p_value, elapsed);
  return vs_base.mean_a >= vs_base.mean_b && vs_random.mean_a >= vs_random.mean_b &&
         vs_base.p_value <= 0.1 && vs_random.p_value <= 0.1 && elapsed < 600.0;
}

// ---------------------------------------------------------------------------
// 7. schedule invariants on an instrumented run
// ---------------------------------------------------------------------------

bool criterion_7() {
  SyntheticSpec spec;
  spec.class_count = 12;
  spec.samples_per_class = 16;
  spec.feature_dim = 12;
  spec.seed = 77;
  const LabeledDataset data = generate_synthetic(spec);

  // strict_checks re-validates coverage, lockstep, and batch containment
  // after every optimization step; a violation throws.
  for (MaskMode mode : {MaskMode::kFixed, MaskMode::kLearnable}) {
    TrainConfig config;
    config.k_max = 8;
    config.epochs_between_divisions = 2;
    config.total_epochs = 10;
    config.finetune_start_epoch = 9;
    config.batch_size = 24;
    config.hidden_dims = {16};
    config.embedding_dim = 16;
    config.mask_mode = mode;
    config.loss.lambda = mode == MaskMode::kLearnable ? 0.1 : 0.0;
    config.seed = 77;
    config.strict_checks = true;

    std::vector<int> k_after;
    try {
      Trainer trainer(config, data);
      trainer.run([&](const Trainer& t, int) {
        k_after.push_back(t.partition().cluster_count);
        if (t.partition().cluster_count != t.masks().count()) {
          throw std::logic_error("lockstep violated");
        }
      });
    } catch (const std::exception& e) {
      std::printf("    invariant violated (%s masks): %s\n", to_string(mode).c_str(), e.what());
      return false;
    }
    const std::vector<int> want = {1, 2, 2, 4, 4, 8, 8, 8, 8, 8};
    if (k_after != want) {
      std::printf("    depth sequence mismatch (%s masks)\n", to_string(mode).c_str());
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// 8. byte-identical reruns
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion_8() {
  RunConfig config;
  config.name = "determinism";
  config.synthetic.class_count = 10;
  config.synthetic.samples_per_class = 12;
  config.synthetic.feature_dim = 10;
  config.synthetic.seed = 88;
  config.trainer.k_max = 4;
  config.trainer.total_epochs = 5;
  config.trainer.batch_size = 16;
  config.trainer.hidden_dims = {16};
  config.trainer.embedding_dim = 8;
  config.trainer.mask_mode = MaskMode::kLearnable;
  config.trainer.loss.lambda = 0.1;
  config.trainer.seed = 88;
  config.eval.recall_ks = {1, 2};
  config.eval.ed_knn_neighbors = 5;

  const fs::path root = fs::temp_directory_path() / "dcml_acceptance";
  fs::remove_all(root);
  const fs::path a = root / "a";
  const fs::path b = root / "b";
  cmd_train(config, a.string());
  cmd_train(config, b.string());

  for (const char* name : {"metrics.csv", "metrics.json", "checkpoint.json", "masks.csv",
                           "events.ndjson", "run_config.json"}) {
    if (slurp(a / name) != slurp(b / name)) {
      std::printf("    %s differs between reruns\n", name);
      return false;
    }
  }
  return true;
}

struct Criterion {
  int id;
  const char* description;
  bool (*run)();
};

const Criterion kCriteria[] = {
    {1, "gradient suite: analytic vs central finite differences (rel err < 1e-4)", criterion_1},
    {2, "uniform-sphere constants: ed_10 = 1.290 +/- 0.02, ed_1 = 1.275 +/- 0.02", criterion_2},
    {3, "oracle equivalence: kmeans optimum, assignment enumeration, metric brute force", criterion_3},
    {4, "conquer identity: fixed orthogonal masks recover the full space, L_s == 0", criterion_4},
    {5, "baseline equivalence: K_max=1 is bit-identical to the single-space trainer", criterion_5},
    {6, "directional claim: progressive K_max=4 >= baseline and random splits (sign test, 0.1)", criterion_6},
    {7, "schedule invariants: depth sequence, lockstep, coverage, batch containment", criterion_7},
    {8, "determinism: byte-identical metric CSVs and checkpoints across reruns", criterion_8},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
      ok = false;
    }
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", c.id, c.description);
    if (!ok) ++failures;
  }
  return failures;
}
