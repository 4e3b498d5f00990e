#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcml/experiment.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"divide-and-conquer metric learning experiments"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "run one training configuration");
  std::string train_config_path;
  std::string train_out;
  std::vector<std::string> overrides;
  train->add_option("--config", train_config_path, "run config JSON")->required();
  train->add_option("--out", train_out, "output directory (default <root>/<name>)");
  train->add_option("--set", overrides, "dotted overrides, e.g. trainer.k_max=8");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run every configuration in a plan");
  std::string plan_path, sweep_root;
  bool resume = false;
  sweep->add_option("--plan", plan_path, "plan JSON")->required();
  sweep->add_option("--out", sweep_root, "output root (default $DCML_OUT_ROOT or ./runs)");
  sweep->add_flag("--resume", resume, "skip runs that already have metrics.json");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a feature CSV");
  std::string eval_ckpt, eval_data, eval_out;
  int eval_subspace = -1;
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--data", eval_data, "feature CSV")->required();
  eval->add_option("--out", eval_out, "write report here instead of stdout");
  eval->add_option("--subspace", eval_subspace, "evaluate one subspace instead of the conquered space");

  // project
  auto* project = app.add_subcommand("project", "2-D PCA projection of embeddings");
  std::string proj_ckpt, proj_data, proj_out;
  double proj_fraction = -1.0;
  project->add_option("--checkpoint", proj_ckpt)->required();
  project->add_option("--data", proj_data, "feature CSV")->required();
  project->add_option("--out", proj_out, "output CSV")->required();
  project->add_option("--train-fraction", proj_fraction, "tag rows by the zero-shot split");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic feature CSV");
  dcml::SyntheticSpec spec;
  std::string gen_out;
  gen->add_option("--classes", spec.class_count);
  gen->add_option("--samples-per-class", spec.samples_per_class);
  gen->add_option("--feature-dim", spec.feature_dim);
  gen->add_option("--modes", spec.mode_count_per_class);
  gen->add_option("--intra-sigma", spec.intra_mode_sigma);
  gen->add_option("--inter-sigma", spec.inter_class_sigma);
  gen->add_option("--seed", spec.seed);
  gen->add_option("--out", gen_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      std::ifstream in(train_config_path);
      if (!in) throw std::runtime_error("cannot open config: " + train_config_path);
      nlohmann::json j;
      in >> j;
      for (const std::string& ov : overrides) dcml::apply_override(j, ov);
      const dcml::RunConfig config = dcml::run_config_from_json(j);
      const std::string out_dir =
          !train_out.empty() ? train_out
                             : (fs::path(dcml::default_output_root()) / config.name).string();
      const dcml::RunResult result = dcml::cmd_train(config, out_dir);
      std::cout << "run " << config.name << " -> " << result.directory << "\n"
                << result.test_metrics.to_json() << "\n";
    } else if (*sweep) {
      const int failures = dcml::cmd_sweep(plan_path, sweep_root, resume);
      if (failures > 0) {
        std::cerr << failures << " run(s) failed\n";
        return 1;
      }
    } else if (*eval) {
      const dcml::MetricsReport report = dcml::cmd_eval(eval_ckpt, eval_data, {}, eval_subspace);
      if (eval_out.empty()) {
        std::cout << report.to_json() << "\n";
      } else {
        std::ofstream out(eval_out);
        out << report.to_json() << "\n";
      }
    } else if (*project) {
      dcml::cmd_project(proj_ckpt, proj_data, proj_fraction, proj_out);
    } else if (*gen) {
      dcml::save_features(dcml::generate_synthetic(spec), gen_out);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
