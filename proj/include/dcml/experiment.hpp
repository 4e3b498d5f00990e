#pragma once

#include <string>

#include <json.hpp>

#include "dcml/dataset.hpp"
#include "dcml/eval.hpp"
#include "dcml/trainer.hpp"

namespace dcml {

// Everything one training run needs: data source, trainer and eval settings.
struct RunConfig {
  std::string name = "run";

  std::string source = "synthetic";  // "synthetic" | "csv"
  std::string csv_path;
  double train_fraction = 0.5;
  std::int64_t split_permute_seed = -1;
  SyntheticSpec synthetic;

  TrainConfig trainer;
  EvalConfig eval;
  int eval_every = 1;  // per-epoch metrics cadence; 0 disables
};

nlohmann::ordered_json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// Dotted-key override, e.g. "trainer.k_max=8" or "dataset.source=csv".
// Values parse as JSON scalars where possible, else as strings.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct PreparedData {
  LabeledDataset train;
  LabeledDataset test;
};
PreparedData prepare_dataset(const RunConfig& config);

struct RunResult {
  std::string directory;
  MetricsReport test_metrics;
  double train_recall1 = 0.0;
  double runtime_seconds = 0.0;
};

// Full run: trains, then writes run_config.json, events.ndjson, metrics.csv
// (per-epoch train/test Recall@1), checkpoint.json, masks.csv, metrics.json.
RunResult cmd_train(const RunConfig& config, const std::string& out_dir);

// Executes every run of a plan file; failures are recorded and do not stop
// the sweep. Returns the number of failed runs.
int cmd_sweep(const std::string& plan_path, const std::string& out_root, bool resume);

// Evaluation without training. subspace < 0 evaluates the conquered space.
MetricsReport cmd_eval(const std::string& checkpoint_path, const std::string& data_csv,
                       const EvalConfig& config = {}, int subspace = -1);

// 2-D PCA projection CSV (x,y,label,split). train_fraction >= 0 tags rows by
// the zero-shot split; otherwise every row is "all".
void cmd_project(const std::string& checkpoint_path, const std::string& data_csv,
                 double train_fraction, const std::string& out_csv);

std::string default_output_root();

}  // namespace dcml
