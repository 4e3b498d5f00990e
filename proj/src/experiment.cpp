#include "dcml/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace fs = std::filesystem;

namespace dcml {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

nlohmann::ordered_json synthetic_to_json(const SyntheticSpec& s) {
  nlohmann::ordered_json j;
  j["class_count"] = s.class_count;
  j["samples_per_class"] = s.samples_per_class;
  j["feature_dim"] = s.feature_dim;
  j["mode_count_per_class"] = s.mode_count_per_class;
  j["intra_mode_sigma"] = s.intra_mode_sigma;
  j["inter_class_sigma"] = s.inter_class_sigma;
  j["seed"] = s.seed;
  return j;
}

SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.class_count = j.value("class_count", s.class_count);
  s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.mode_count_per_class = j.value("mode_count_per_class", s.mode_count_per_class);
  s.intra_mode_sigma = j.value("intra_mode_sigma", s.intra_mode_sigma);
  s.inter_class_sigma = j.value("inter_class_sigma", s.inter_class_sigma);
  s.seed = j.value("seed", s.seed);
  return s;
}

}  // namespace

nlohmann::ordered_json run_config_to_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["name"] = config.name;

  nlohmann::ordered_json jd;
  jd["source"] = config.source;
  jd["path"] = config.csv_path;
  jd["train_fraction"] = config.train_fraction;
  jd["split_permute_seed"] = config.split_permute_seed;
  jd["synthetic"] = synthetic_to_json(config.synthetic);
  j["dataset"] = jd;

  const TrainConfig& t = config.trainer;
  nlohmann::ordered_json jt;
  jt["k_max"] = t.k_max;
  jt["epochs_between_divisions"] = t.epochs_between_divisions;
  jt["lambda"] = t.loss.lambda;
  jt["total_epochs"] = t.total_epochs;
  jt["finetune_start_epoch"] = t.finetune_start_epoch;
  jt["batch_size"] = t.batch_size;
  jt["images_per_class"] = t.images_per_class;
  jt["loss"] = to_string(t.loss.kind);
  jt["alpha"] = t.loss.alpha;
  jt["beta"] = t.loss.beta;
  jt["mask_mode"] = to_string(t.mask_mode);
  jt["division_mode"] = to_string(t.division_mode);
  jt["seed"] = t.seed;
  jt["hidden_dims"] = t.hidden_dims;
  jt["embedding_dim"] = t.embedding_dim;
  jt["learning_rate"] = t.learning_rate;
  jt["mask_lr_multiplier"] = t.mask_lr_multiplier;
  jt["dropout_p"] = t.dropout_p;
  jt["cluster_restarts"] = t.cluster_restarts;
  jt["triplet_cap"] = t.triplet_cap;
  jt["class_group_map"] = t.class_group_map;
  jt["strict_checks"] = t.strict_checks;
  j["trainer"] = jt;

  nlohmann::ordered_json je;
  je["recall_ks"] = config.eval.recall_ks;
  je["ed_knn_neighbors"] = config.eval.ed_knn_neighbors;
  je["clustering_seed"] = config.eval.clustering_seed;
  je["eval_every"] = config.eval_every;
  j["eval"] = je;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig config;
  config.name = j.value("name", config.name);
  if (j.contains("dataset")) {
    const auto& jd = j.at("dataset");
    config.source = jd.value("source", config.source);
    config.csv_path = jd.value("path", config.csv_path);
    config.train_fraction = jd.value("train_fraction", config.train_fraction);
    config.split_permute_seed = jd.value("split_permute_seed", config.split_permute_seed);
    if (jd.contains("synthetic")) config.synthetic = synthetic_from_json(jd.at("synthetic"));
  }
  if (j.contains("trainer")) {
    const auto& jt = j.at("trainer");
    TrainConfig& t = config.trainer;
    t.k_max = jt.value("k_max", t.k_max);
    t.epochs_between_divisions = jt.value("epochs_between_divisions", t.epochs_between_divisions);
    t.loss.lambda = jt.value("lambda", t.loss.lambda);
    t.total_epochs = jt.value("total_epochs", t.total_epochs);
    t.finetune_start_epoch = jt.value("finetune_start_epoch", t.finetune_start_epoch);
    t.batch_size = jt.value("batch_size", t.batch_size);
    t.images_per_class = jt.value("images_per_class", t.images_per_class);
    if (jt.contains("loss")) t.loss.kind = loss_kind_from_string(jt.at("loss").get<std::string>());
    t.loss.alpha = jt.value("alpha", t.loss.alpha);
    t.loss.beta = jt.value("beta", t.loss.beta);
    if (jt.contains("mask_mode")) t.mask_mode = mask_mode_from_string(jt.at("mask_mode").get<std::string>());
    if (jt.contains("division_mode")) {
      t.division_mode = division_mode_from_string(jt.at("division_mode").get<std::string>());
    }
    t.seed = jt.value("seed", t.seed);
    if (jt.contains("hidden_dims")) t.hidden_dims = jt.at("hidden_dims").get<std::vector<int>>();
    t.embedding_dim = jt.value("embedding_dim", t.embedding_dim);
    t.learning_rate = jt.value("learning_rate", t.learning_rate);
    t.mask_lr_multiplier = jt.value("mask_lr_multiplier", t.mask_lr_multiplier);
    t.dropout_p = jt.value("dropout_p", t.dropout_p);
    t.cluster_restarts = jt.value("cluster_restarts", t.cluster_restarts);
    t.triplet_cap = jt.value("triplet_cap", t.triplet_cap);
    if (jt.contains("class_group_map")) {
      t.class_group_map = jt.at("class_group_map").get<std::vector<int>>();
    }
    t.strict_checks = jt.value("strict_checks", t.strict_checks);
  }
  if (j.contains("eval")) {
    const auto& je = j.at("eval");
    if (je.contains("recall_ks")) config.eval.recall_ks = je.at("recall_ks").get<std::vector<int>>();
    config.eval.ed_knn_neighbors = je.value("ed_knn_neighbors", config.eval.ed_knn_neighbors);
    config.eval.clustering_seed = je.value("clustering_seed", config.eval.clustering_seed);
    config.eval_every = je.value("eval_every", config.eval_every);
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override must look like key.path=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  std::string pointer = "/";
  for (char c : key) pointer += (c == '.') ? '/' : c;

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;  // plain string
  }
  j[nlohmann::json::json_pointer(pointer)] = parsed;
}

PreparedData prepare_dataset(const RunConfig& config) {
  LabeledDataset full;
  if (config.source == "synthetic") {
    full = generate_synthetic(config.synthetic);
  } else if (config.source == "csv") {
    if (config.csv_path.empty()) throw std::invalid_argument("dataset.path required for csv source");
    full = load_features(config.csv_path);
  } else {
    throw std::invalid_argument("unknown dataset source: " + config.source);
  }
  const SplitResult split = zero_shot_split(full, config.train_fraction, config.split_permute_seed);
  return {split.train, split.test};
}

RunResult cmd_train(const RunConfig& config, const std::string& out_dir) {
  const auto started = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  const PreparedData data = prepare_dataset(config);
  Trainer trainer(config.trainer, data.train);

  std::ofstream metrics_csv(fs::path(out_dir) / "metrics.csv");
  metrics_csv << "epoch,k,phase,mean_loss,train_recall1,test_recall1\n";

  const auto eval_recall1 = [&](const LabeledDataset& d) {
    if (d.size() < 2) return 0.0;
    const Eigen::MatrixXd emb = embed_for_eval(trainer.network(), trainer.masks(), d.features);
    return recall_at_k(emb, d.labels, 1);
  };

  RunResult result;
  trainer.run([&](const Trainer& t, int epoch) {
    if (config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == t.config().total_epochs)) {
      const double train_r1 = eval_recall1(data.train);
      const double test_r1 = eval_recall1(data.test);
      metrics_csv << epoch << ',' << t.partition().cluster_count << ','
                  << (t.finetuning() ? "finetune" : "divide") << ','
                  << fmt_double(t.last_epoch_mean_loss()) << ',' << fmt_double(train_r1) << ','
                  << fmt_double(test_r1) << '\n';
    }
  });
  metrics_csv.close();

  {
    std::ofstream cfg(fs::path(out_dir) / "run_config.json");
    cfg << run_config_to_json(config).dump(2) << '\n';
  }
  {
    std::ofstream events(fs::path(out_dir) / "events.ndjson");
    for (const TrainEvent& ev : trainer.events()) events << ev.to_json() << '\n';
  }
  save_checkpoint(trainer.network(), trainer.masks(), (fs::path(out_dir) / "checkpoint.json").string());
  {
    std::ofstream masks_csv(fs::path(out_dir) / "masks.csv");
    const Eigen::MatrixXd& raw = trainer.masks().raw;
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
      for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        masks_csv << (c ? "," : "") << fmt_double(raw(r, c));
      }
      masks_csv << '\n';
    }
  }

  const Eigen::MatrixXd test_emb =
      embed_for_eval(trainer.network(), trainer.masks(), data.test.features);
  result.test_metrics = evaluate_embeddings(test_emb, data.test.labels, config.eval);
  result.train_recall1 = eval_recall1(data.train);
  {
    std::ofstream mj(fs::path(out_dir) / "metrics.json");
    mj << result.test_metrics.to_json() << '\n';
  }

  result.directory = out_dir;
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

int cmd_sweep(const std::string& plan_path, const std::string& out_root, bool resume) {
  std::ifstream in(plan_path);
  if (!in) throw std::runtime_error("cannot open plan: " + plan_path);
  nlohmann::json plan;
  in >> plan;

  const std::string root = !out_root.empty()       ? out_root
                           : plan.contains("output_root") ? plan.at("output_root").get<std::string>()
                                                          : default_output_root();
  fs::create_directories(root);

  nlohmann::json base = plan.value("base", nlohmann::json::object());
  if (!plan.contains("runs") || !plan.at("runs").is_array()) {
    throw std::runtime_error("plan has no runs array");
  }

  std::vector<std::string> names;
  std::ofstream summary(fs::path(root) / "summary.csv");
  summary << "name,k_max,epochs_between_divisions,recall_at_1,nmi,marp,effective_dim,runtime_seconds\n";

  int failures = 0;
  for (const auto& entry : plan.at("runs")) {
    nlohmann::json merged = base;
    if (entry.contains("config")) merged.merge_patch(entry.at("config"));
    if (entry.contains("overrides")) {
      for (const auto& [k, v] : entry.at("overrides").items()) {
        apply_override(merged, k + "=" + v.dump());
      }
    }
    const std::string name = entry.value("name", std::string("run") + std::to_string(names.size()));
    if (std::find(names.begin(), names.end(), name) != names.end()) {
      throw std::runtime_error("duplicate run name in plan: " + name);
    }
    names.push_back(name);
    merged["name"] = name;

    RunConfig config = run_config_from_json(merged);
    const fs::path run_dir = fs::path(root) / name;

    try {
      MetricsReport metrics;
      double runtime = 0.0;
      if (resume && fs::exists(run_dir / "metrics.json")) {
        std::ifstream mj(run_dir / "metrics.json");
        nlohmann::json j;
        mj >> j;
        metrics.nmi = j.value("nmi", 0.0);
        metrics.marp = j.value("marp", 0.0);
        metrics.effective_dim = j.value("effective_dim", 1);
        if (j.contains("recall_at") && j.at("recall_at").contains("1")) {
          metrics.recall_at[1] = j.at("recall_at").at("1").get<double>();
        }
      } else {
        const RunResult r = cmd_train(config, run_dir.string());
        metrics = r.test_metrics;
        runtime = r.runtime_seconds;
      }
      const double r1 = metrics.recall_at.count(1) ? metrics.recall_at.at(1) : 0.0;
      summary << name << ',' << config.trainer.k_max << ','
              << config.trainer.epochs_between_divisions << ',' << fmt_double(r1) << ','
              << fmt_double(metrics.nmi) << ',' << fmt_double(metrics.marp) << ','
              << metrics.effective_dim << ',' << fmt_double(runtime) << '\n';
    } catch (const std::exception& e) {
      ++failures;
      summary << name << ',' << config.trainer.k_max << ','
              << config.trainer.epochs_between_divisions << ",,,,,\n";
      std::ofstream err(fs::path(root) / (name + ".error.txt"));
      err << e.what() << '\n';
    }
  }
  return failures;
}

MetricsReport cmd_eval(const std::string& checkpoint_path, const std::string& data_csv,
                       const EvalConfig& config, int subspace) {
  EmbeddingNetwork net;
  MaskSet masks;
  load_checkpoint(checkpoint_path, net, masks);
  const LabeledDataset data = load_features(data_csv);
  if (data.feature_dim() != net.input_dim()) {
    throw std::runtime_error("checkpoint/dataset dimension mismatch: features " +
                             std::to_string(data.feature_dim()) + " vs network input " +
                             std::to_string(net.input_dim()));
  }
  const Eigen::MatrixXd emb = embed_for_eval(net, masks, data.features, subspace);
  return evaluate_embeddings(emb, data.labels, config);
}

void cmd_project(const std::string& checkpoint_path, const std::string& data_csv,
                 double train_fraction, const std::string& out_csv) {
  EmbeddingNetwork net;
  MaskSet masks;
  load_checkpoint(checkpoint_path, net, masks);
  const LabeledDataset data = load_features(data_csv);
  if (data.feature_dim() != net.input_dim()) {
    throw std::runtime_error("checkpoint/dataset dimension mismatch");
  }
  const Eigen::MatrixXd emb = embed_for_eval(net, masks, data.features);
  const Eigen::MatrixXd coords = pca_project_2d(emb);

  std::vector<std::string> split(static_cast<std::size_t>(data.size()), "all");
  if (train_fraction > 0.0 && train_fraction < 1.0) {
    std::vector<int> classes = data.present_classes();
    const auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(classes.size())));
    std::vector<bool> in_train(static_cast<std::size_t>(data.class_count), false);
    for (std::size_t i = 0; i < n_train && i < classes.size(); ++i) {
      in_train[static_cast<std::size_t>(classes[i])] = true;
    }
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      split[static_cast<std::size_t>(i)] =
          in_train[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])] ? "train" : "test";
    }
  }

  std::ofstream out(out_csv);
  if (!out) throw std::runtime_error("cannot write projection: " + out_csv);
  out << "x,y,label,split\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    out << fmt_double(coords(i, 0)) << ',' << fmt_double(coords(i, 1)) << ','
        << data.labels[static_cast<std::size_t>(i)] << ',' << split[static_cast<std::size_t>(i)] << '\n';
  }
}

std::string default_output_root() {
  const char* env = std::getenv("DCML_OUT_ROOT");
  return env && *env ? env : "runs";
}

}  // namespace dcml
