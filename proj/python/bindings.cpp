#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dcml/dataset.hpp"
#include "dcml/eval.hpp"
#include "dcml/experiment.hpp"
#include "dcml/losses.hpp"
#include "dcml/partition.hpp"
#include "dcml/subspace.hpp"
#include "dcml/trainer.hpp"

namespace py = pybind11;
using namespace dcml;

namespace {

LabeledDataset dataset_from(const Eigen::MatrixXd& features, const std::vector<int>& labels) {
  LabeledDataset d;
  d.features = features;
  d.labels = labels;
  int max_label = -1;
  for (int c : labels) max_label = std::max(max_label, c);
  d.class_count = max_label + 1;
  return d;
}

py::tuple dataset_to(const LabeledDataset& d) {
  return py::make_tuple(d.features, d.labels);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "divide-and-conquer metric learning core";

  m.def(
      "generate_synthetic",
      [](int class_count, int samples_per_class, int feature_dim, int mode_count_per_class,
         double intra_mode_sigma, double inter_class_sigma, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.class_count = class_count;
        spec.samples_per_class = samples_per_class;
        spec.feature_dim = feature_dim;
        spec.mode_count_per_class = mode_count_per_class;
        spec.intra_mode_sigma = intra_mode_sigma;
        spec.inter_class_sigma = inter_class_sigma;
        spec.seed = seed;
        return dataset_to(generate_synthetic(spec));
      },
      py::arg("class_count"), py::arg("samples_per_class"), py::arg("feature_dim"),
      py::arg("mode_count_per_class") = 2, py::arg("intra_mode_sigma") = 0.1,
      py::arg("inter_class_sigma") = 1.0, py::arg("seed") = 1,
      "Gaussian-mixture dataset; returns (features, labels).");

  m.def(
      "load_features", [](const std::string& path) { return dataset_to(load_features(path)); },
      py::arg("path"), "Reads a class_id,feat_0,...,feat_{p-1} CSV.");

  m.def(
      "save_features",
      [](const Eigen::MatrixXd& features, const std::vector<int>& labels, const std::string& path) {
        save_features(dataset_from(features, labels), path);
      },
      py::arg("features"), py::arg("labels"), py::arg("path"));

  m.def(
      "zero_shot_split",
      [](const Eigen::MatrixXd& features, const std::vector<int>& labels, double train_fraction,
         std::int64_t permute_seed) {
        const SplitResult s = zero_shot_split(dataset_from(features, labels), train_fraction, permute_seed);
        return py::make_tuple(dataset_to(s.train), dataset_to(s.test));
      },
      py::arg("features"), py::arg("labels"), py::arg("train_fraction"),
      py::arg("permute_seed") = -1,
      "Disjoint-class split; returns ((train_X, train_y), (test_X, test_y)).");

  m.def(
      "kmeans",
      [](const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts, int max_iterations) {
        KMeansOptions opts;
        opts.restarts = restarts;
        opts.max_iterations = max_iterations;
        const KMeansResult r = kmeans(points, k, seed, opts);
        return py::make_tuple(r.partition.assignment, r.centroids, r.objective);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 1, py::arg("restarts") = 1,
      py::arg("max_iterations") = 100,
      "Lloyd k-means; returns (assignment, centroids, objective).");

  m.def("solve_assignment", &solve_assignment, py::arg("scores"),
        "Score-maximizing permutation (old index -> new index).");

  m.def(
      "iou_matrix",
      [](const std::vector<int>& a, const std::vector<int>& b, int k) {
        Partition pa, pb;
        pa.assignment = a;
        pb.assignment = b;
        pa.cluster_count = pb.cluster_count = k;
        return iou_matrix(pa, pb);
      },
      py::arg("old_assignment"), py::arg("new_assignment"), py::arg("k"));

  m.def("nmi", &nmi, py::arg("partition_a"), py::arg("partition_b"));
  m.def(
      "recall_at_k",
      [](const Eigen::MatrixXd& emb, const std::vector<int>& labels, int k) {
        return recall_at_k(emb, labels, k);
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("k"));
  m.def("marp", &marp, py::arg("embeddings"), py::arg("labels"));
  m.def(
      "effective_dimensionality",
      [](const Eigen::MatrixXd& emb, double coverage) {
        return effective_dimensionality(emb, coverage);
      },
      py::arg("embeddings"), py::arg("coverage") = 0.95);
  m.def("ed_knn", &ed_knn, py::arg("embeddings"), py::arg("k"));
  m.def(
      "class_variance_stats",
      [](const Eigen::MatrixXd& emb, const std::vector<int>& labels) {
        const ClassVarianceStats s = class_variance_stats(emb, labels);
        return py::make_tuple(s.intra_var, s.inter_var, s.nn_ratio);
      },
      py::arg("embeddings"), py::arg("labels"),
      "Returns (intra_var, inter_var, nn_ratio).");

  m.def(
      "evaluate",
      [](const Eigen::MatrixXd& emb, const std::vector<int>& labels) {
        return evaluate_embeddings(emb, labels).to_json();
      },
      py::arg("embeddings"), py::arg("labels"), "Full metrics report as a JSON string.");

  m.def(
      "fixed_orthogonal_masks",
      [](int dim, int k) { return Eigen::MatrixXd(init_fixed_orthogonal(dim, k).raw); },
      py::arg("dim"), py::arg("k"));
  m.def(
      "conquer_masks",
      [](const Eigen::MatrixXd& raw) {
        MaskSet masks;
        masks.raw = raw;
        return Eigen::VectorXd(masks.conquer());
      },
      py::arg("raw_masks"), "Elementwise sum of rectified masks.");
  m.def(
      "apply_mask_rows",
      [](const Eigen::MatrixXd& emb, const Eigen::VectorXd& raw_mask) {
        return masked_unit_rows(emb, raw_mask).unit;
      },
      py::arg("embeddings"), py::arg("raw_mask"),
      "Rectified mask, elementwise product, row normalization.");

  m.def(
      "train",
      [](const std::string& trainer_config_json, const Eigen::MatrixXd& features,
         const std::vector<int>& labels) {
        nlohmann::json wrapper;
        wrapper["trainer"] = nlohmann::json::parse(trainer_config_json);
        const RunConfig config = run_config_from_json(wrapper);
        Trainer trainer(config.trainer, dataset_from(features, labels));
        trainer.run();
        return checkpoint_to_json(trainer.network(), trainer.masks());
      },
      py::arg("trainer_config_json"), py::arg("features"), py::arg("labels"),
      "Runs the divide-and-conquer schedule; returns a checkpoint JSON string.");

  m.def(
      "embed",
      [](const std::string& checkpoint_json, const Eigen::MatrixXd& features, int subspace) {
        EmbeddingNetwork net;
        MaskSet masks;
        checkpoint_from_json(checkpoint_json, net, masks);
        return embed_for_eval(net, masks, features, subspace);
      },
      py::arg("checkpoint_json"), py::arg("features"), py::arg("subspace") = -1,
      "Conquered-space (or single-subspace) unit embeddings.");

  m.def(
      "run_experiment",
      [](const std::string& run_config_json, const std::string& out_dir) {
        const RunConfig config = run_config_from_json(nlohmann::json::parse(run_config_json));
        const RunResult r = cmd_train(config, out_dir);
        return r.test_metrics.to_json();
      },
      py::arg("run_config_json"), py::arg("out_dir"),
      "Full training run with artifacts on disk; returns the held-out metrics JSON.");
}
