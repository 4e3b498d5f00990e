#include "dcml/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dcml {

DivisionMode division_mode_from_string(const std::string& name) {
  if (name == "progressive") return DivisionMode::kProgressive;
  if (name == "not_progressive") return DivisionMode::kNotProgressive;
  if (name == "random_splits") return DivisionMode::kRandomSplits;
  if (name == "label_grouping") return DivisionMode::kLabelGrouping;
  throw std::invalid_argument("unknown division mode: " + name);
}

std::string to_string(DivisionMode mode) {
  switch (mode) {
    case DivisionMode::kProgressive: return "progressive";
    case DivisionMode::kNotProgressive: return "not_progressive";
    case DivisionMode::kRandomSplits: return "random_splits";
    case DivisionMode::kLabelGrouping: return "label_grouping";
  }
  return "?";
}

MaskMode mask_mode_from_string(const std::string& name) {
  if (name == "fixed") return MaskMode::kFixed;
  if (name == "learnable") return MaskMode::kLearnable;
  throw std::invalid_argument("unknown mask mode: " + name);
}

std::string to_string(MaskMode mode) {
  return mode == MaskMode::kFixed ? "fixed" : "learnable";
}

namespace {

bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

int log2_floor(int v) {
  int d = 0;
  while ((1 << (d + 1)) <= v) ++d;
  return d;
}

}  // namespace

void TrainConfig::validate(const LabeledDataset& data) const {
  if (!is_power_of_two(k_max)) throw std::invalid_argument("k_max must be a power of two >= 1");
  if (epochs_between_divisions < 1) throw std::invalid_argument("epochs_between_divisions must be >= 1");
  if (total_epochs < 0) throw std::invalid_argument("total_epochs must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (images_per_class < 1) throw std::invalid_argument("images_per_class must be >= 1");
  if (embedding_dim < 1) throw std::invalid_argument("embedding_dim must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(mask_lr_multiplier > 0.0)) throw std::invalid_argument("mask_lr_multiplier must be > 0");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw std::invalid_argument("dropout_p must be in [0, 1)");
  if (cluster_restarts < 1) throw std::invalid_argument("cluster_restarts must be >= 1");
  loss.validate();
  if (data.size() < k_max) {
    throw std::invalid_argument("dataset too small for k_max=" + std::to_string(k_max));
  }
  if (mask_mode == MaskMode::kFixed && division_mode != DivisionMode::kLabelGrouping &&
      embedding_dim % k_max != 0) {
    throw std::invalid_argument("fixed masks need k_max to divide embedding_dim");
  }
  if (division_mode == DivisionMode::kLabelGrouping) {
    if (class_group_map.size() != static_cast<std::size_t>(data.class_count)) {
      throw std::invalid_argument("label_grouping needs a class_group_map entry per class");
    }
    for (int g : class_group_map) {
      if (g < 0) throw std::invalid_argument("class_group_map entries must be >= 0");
    }
  }
}

std::string TrainEvent::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = type;
  j["epoch"] = epoch;
  if (step >= 0) j["step"] = step;
  if (cluster >= 0) j["cluster"] = cluster;
  if (type == "step") j["loss"] = loss;
  if (!phase.empty()) j["phase"] = phase;
  if (consistency_nmi >= 0.0) j["consistency_nmi"] = consistency_nmi;
  if (retained_fraction >= 0.0) j["retained_fraction"] = retained_fraction;
  if (cluster_count > 0) j["k"] = cluster_count;
  if (!message.empty()) j["message"] = message;
  return j.dump();
}

Trainer::Trainer(TrainConfig config, LabeledDataset train_data)
    : config_(std::move(config)),
      data_(std::move(train_data)),
      optimizer_(config_.learning_rate),
      batch_rng_(make_rng(config_.seed, 1)),
      mine_rng_(make_rng(config_.seed, 2)),
      cluster_rng_(make_rng(config_.seed, 3)),
      dropout_rng_(make_rng(config_.seed, 4)) {
  config_.validate(data_);
  data_.validate();
  net_ = EmbeddingNetwork(data_.feature_dim(), config_.hidden_dims, config_.embedding_dim,
                          mix_seed(config_.seed, 10));
  init_partition_and_masks();
  check_invariants();
}

void Trainer::init_partition_and_masks() {
  const int d = config_.embedding_dim;
  switch (config_.division_mode) {
    case DivisionMode::kProgressive:
    case DivisionMode::kRandomSplits:
      partition_ = Partition::single_cluster(data_.size());
      masks_ = init_root_mask(d, config_.mask_mode);
      break;
    case DivisionMode::kNotProgressive: {
      // Straight to K_max in the initial embedding space; reclustered every E
      // epochs like the progressive schedule.
      KMeansOptions opts;
      opts.restarts = config_.cluster_restarts;
      const KMeansResult r =
          kmeans(full_space_unit_embeddings(), config_.k_max, cluster_rng_(), opts);
      partition_ = r.partition;
      partition_.depth = log2_floor(config_.k_max);
      partition_.lineage.assign(static_cast<std::size_t>(config_.k_max), -1);
      masks_ = config_.mask_mode == MaskMode::kFixed
                   ? init_fixed_orthogonal(d, config_.k_max)
                   : init_learnable_replicated(d, config_.k_max, partition_.depth);
      break;
    }
    case DivisionMode::kLabelGrouping: {
      int groups = 0;
      for (int g : config_.class_group_map) groups = std::max(groups, g + 1);
      partition_.assignment.resize(static_cast<std::size_t>(data_.size()));
      for (Eigen::Index i = 0; i < data_.size(); ++i) {
        partition_.assignment[static_cast<std::size_t>(i)] =
            config_.class_group_map[static_cast<std::size_t>(data_.labels[static_cast<std::size_t>(i)])];
      }
      partition_.cluster_count = groups;
      partition_.depth = 0;
      partition_.lineage.assign(static_cast<std::size_t>(groups), -1);
      if (config_.mask_mode == MaskMode::kFixed) {
        if (d % groups != 0) {
          throw std::invalid_argument("label_grouping with fixed masks needs group count to divide d");
        }
        masks_ = init_fixed_orthogonal(d, groups);
      } else {
        masks_ = init_learnable_replicated(d, groups, 0);
      }
      break;
    }
  }
  for (std::size_t k = 0; k < partition_.sizes().size(); ++k) {
    if (partition_.sizes()[k] < 2) {
      TrainEvent ev;
      ev.type = "warn";
      ev.epoch = epoch_;
      ev.cluster = static_cast<int>(k);
      ev.message = "cluster has fewer than 2 samples; skipped when batching";
      events_.push_back(ev);
    }
  }
}

Eigen::MatrixXd Trainer::full_space_unit_embeddings() const {
  return normalize_rows(net_.forward(data_.features)).unit;
}

std::vector<Eigen::Index> draw_class_balanced_batch(const std::vector<Eigen::Index>& pool,
                                                    const std::vector<int>& labels,
                                                    int batch_size, int per_class, Rng& rng) {
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i : pool) by_class[labels[static_cast<std::size_t>(i)]].push_back(i);
  std::vector<int> rich;  // classes able to donate per_class samples
  for (const auto& [c, idx] : by_class) {
    if (static_cast<int>(idx.size()) >= per_class) rich.push_back(c);
  }

  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(batch_size), pool.size());
  const int slots = batch_size / per_class;
  std::vector<Eigen::Index> batch;
  if (rich.size() >= 2 && slots >= 1) {
    const std::vector<int> chosen =
        sample_without_replacement(rich, std::min<std::size_t>(static_cast<std::size_t>(slots), rich.size()), rng);
    for (int c : chosen) {
      for (Eigen::Index i :
           sample_without_replacement(by_class[c], static_cast<std::size_t>(per_class), rng)) {
        batch.push_back(i);
      }
    }
    if (batch.size() < want) {  // top up uniformly from the rest of the pool
      std::vector<Eigen::Index> rest;
      for (Eigen::Index i : pool) {
        if (std::find(batch.begin(), batch.end(), i) == batch.end()) rest.push_back(i);
      }
      for (Eigen::Index i : sample_without_replacement(rest, want - batch.size(), rng)) {
        batch.push_back(i);
      }
    }
  } else {
    batch = sample_without_replacement(pool, want, rng);  // tiny cluster fallback
  }
  return batch;
}

Trainer::ClusterBatch Trainer::sample_cluster_batch() {
  const auto members = partition_.members();
  std::vector<int> eligible;
  for (int k = 0; k < partition_.cluster_count; ++k) {
    if (members[static_cast<std::size_t>(k)].size() >= 2) eligible.push_back(k);
  }
  if (eligible.empty()) throw std::runtime_error("no cluster with at least 2 samples");

  ClusterBatch out;
  out.cluster = eligible.size() == 1
                    ? eligible[0]
                    : eligible[uniform_index(batch_rng_, eligible.size())];
  out.indices = draw_class_balanced_batch(members[static_cast<std::size_t>(out.cluster)], data_.labels,
                                          config_.batch_size, config_.images_per_class, batch_rng_);
  return out;
}

ObjectiveResult objective_from_forward(const EmbeddingNetwork& net,
                                       const EmbeddingNetwork::ForwardCache& cache,
                                       const Eigen::MatrixXd& raw_embeddings, const MaskSet& masks,
                                       int cluster, bool use_conquered,
                                       const std::vector<int>& labels, const LossConfig& loss_config,
                                       std::size_t cap, Rng& rng) {
  const Eigen::VectorXd mask_row =
      use_conquered ? masks.conquer() : Eigen::VectorXd(masks.raw.row(cluster).transpose());
  const MaskedUnitRows mu = masked_unit_rows(raw_embeddings, mask_row);
  const LossResult loss = batch_loss(loss_config, mu.unit, labels, cap, rng);
  const MaskedUnitGrads mg = masked_unit_rows_backward(raw_embeddings, mask_row, mu, loss.embedding_grad);

  ObjectiveResult out;
  out.value = loss.value;
  out.loss_empty = loss.empty;
  out.mask_grads = Eigen::MatrixXd::Zero(masks.raw.rows(), masks.raw.cols());
  if (masks.mode == MaskMode::kLearnable) {
    if (use_conquered) {
      // conquered mask: every subspace receives the shared gradient, gated by
      // its own rectifier
      for (int i = 0; i < masks.count(); ++i) {
        out.mask_grads.row(i) = mg.raw_mask.transpose().cwiseProduct(
            (masks.raw.row(i).array() > 0.0).cast<double>().matrix());
      }
    } else {
      out.mask_grads.row(cluster) = mg.raw_mask.transpose();
      if (loss_config.lambda > 0.0 && masks.count() >= 2) {
        const MaskPenaltyResult orth = mask_orthogonality_loss(masks.raw);
        out.value += loss_config.lambda * orth.value;
        out.mask_grads += loss_config.lambda * orth.raw_grad;
      }
    }
  }
  out.net_grads = net.backward(cache, mg.embeddings);
  return out;
}

ObjectiveResult total_objective(const EmbeddingNetwork& net, const MaskSet& masks, int cluster,
                                bool use_conquered, const Eigen::MatrixXd& batch,
                                const std::vector<int>& labels, const LossConfig& loss_config,
                                std::size_t cap, Rng& rng) {
  EmbeddingNetwork::ForwardCache cache;
  const Eigen::MatrixXd raw = net.forward(batch, &cache);
  return objective_from_forward(net, cache, raw, masks, cluster, use_conquered, labels, loss_config,
                                cap, rng);
}

void Trainer::step(const ClusterBatch& batch) {
  if (config_.strict_checks) {
    for (Eigen::Index i : batch.indices) {
      if (partition_.assignment[static_cast<std::size_t>(i)] != batch.cluster) {
        throw std::logic_error("batch sample outside its cluster");
      }
    }
  }
  const Eigen::Index b = static_cast<Eigen::Index>(batch.indices.size());
  Eigen::MatrixXd x(b, data_.feature_dim());
  std::vector<int> batch_labels(static_cast<std::size_t>(b));
  for (Eigen::Index r = 0; r < b; ++r) {
    x.row(r) = data_.features.row(batch.indices[static_cast<std::size_t>(r)]);
    batch_labels[static_cast<std::size_t>(r)] =
        data_.labels[static_cast<std::size_t>(batch.indices[static_cast<std::size_t>(r)])];
  }

  EmbeddingNetwork::ForwardCache cache;
  const Eigen::MatrixXd raw = net_.forward_train(x, config_.dropout_p, dropout_rng_, &cache);

  ObjectiveResult obj;
  bool degraded = false;
  try {
    obj = objective_from_forward(net_, cache, raw, masks_, batch.cluster, finetuning_,
                                 batch_labels, config_.loss, config_.triplet_cap, mine_rng_);
  } catch (const std::invalid_argument& e) {
    // single-class batches cannot feed pair-based losses; degrade to an
    // empty-loss step so per-cluster sampling stays robust
    obj.value = 0.0;
    obj.loss_empty = true;
    obj.net_grads = net_.zero_gradients();
    obj.mask_grads = Eigen::MatrixXd::Zero(masks_.raw.rows(), masks_.raw.cols());
    degraded = true;
    TrainEvent ev;
    ev.type = "warn";
    ev.epoch = epoch_;
    ev.cluster = batch.cluster;
    ev.message = e.what();
    events_.push_back(ev);
  }

  if (obj.loss_empty && !degraded) {
    TrainEvent ev;
    ev.type = "warn";
    ev.epoch = epoch_;
    ev.cluster = batch.cluster;
    ev.message = "no valid triplets/pairs in batch";
    events_.push_back(ev);
  }

  if (!std::isfinite(obj.value)) {
    std::ostringstream dump;
    dump << "non-finite loss at epoch " << epoch_ << " cluster " << batch.cluster
         << " batch_size " << b << " loss " << obj.value << " embedding_norm " << raw.norm();
    TrainEvent ev;
    ev.type = "warn";
    ev.epoch = epoch_;
    ev.cluster = batch.cluster;
    ev.message = dump.str();
    events_.push_back(ev);
    throw std::runtime_error(dump.str());
  }

  std::vector<AdamOptimizer::Block> blocks;
  for (std::size_t l = 0; l < net_.layer_count(); ++l) {
    auto& layer = net_.layer(l);
    blocks.push_back({layer.weight.data(), obj.net_grads.weight[l].data(), layer.weight.size(), 1.0});
    blocks.push_back({layer.bias.data(), obj.net_grads.bias[l].data(), layer.bias.size(), 1.0});
  }
  if (masks_.mode == MaskMode::kLearnable) {
    blocks.push_back({masks_.raw.data(), obj.mask_grads.data(), masks_.raw.size(),
                      config_.mask_lr_multiplier});
  }
  optimizer_.step(blocks);
  const double total = obj.value;

  TrainEvent ev;
  ev.type = "step";
  ev.epoch = epoch_;
  ev.step = static_cast<int>(step_in_epoch_);
  ev.cluster = batch.cluster;
  ev.loss = total;
  ev.phase = finetuning_ ? "finetune" : "divide";
  events_.push_back(ev);
  epoch_loss_sum_ += total;
}

void Trainer::train_epoch() {
  const Eigen::Index steps =
      (data_.size() + config_.batch_size - 1) / static_cast<Eigen::Index>(config_.batch_size);
  epoch_loss_sum_ = 0.0;
  for (step_in_epoch_ = 0; step_in_epoch_ < steps; ++step_in_epoch_) {
    step(sample_cluster_batch());
    if (config_.strict_checks) check_invariants();
  }
  last_epoch_mean_loss_ = steps > 0 ? epoch_loss_sum_ / static_cast<double>(steps) : 0.0;
}

void Trainer::division_step() {
  switch (config_.division_mode) {
    case DivisionMode::kProgressive:
    case DivisionMode::kNotProgressive: {
      const Eigen::MatrixXd unit = full_space_unit_embeddings();
      KMeansOptions opts;
      opts.restarts = config_.cluster_restarts;
      const ReclusterResult rec = recluster_and_match(unit, partition_, cluster_rng_(), opts);
      partition_ = rec.partition;
      TrainEvent ev;
      ev.type = "division";
      ev.epoch = epoch_;
      ev.consistency_nmi = rec.consistency_nmi;
      ev.retained_fraction = rec.retained_fraction;
      if (config_.division_mode == DivisionMode::kProgressive &&
          partition_.cluster_count < config_.k_max) {
        partition_ = bisect(partition_, unit, cluster_rng_());
        masks_.split_for_next_depth();
      }
      ev.cluster_count = partition_.cluster_count;
      events_.push_back(ev);
      break;
    }
    case DivisionMode::kRandomSplits: {
      if (partition_.cluster_count < config_.k_max) {
        partition_ = bisect_random(partition_, cluster_rng_());
        masks_.split_for_next_depth();
        TrainEvent ev;
        ev.type = "division";
        ev.epoch = epoch_;
        ev.cluster_count = partition_.cluster_count;
        events_.push_back(ev);
      }
      break;
    }
    case DivisionMode::kLabelGrouping:
      break;  // static grouping, never updated
  }
  for (std::size_t k = 0; k < partition_.sizes().size(); ++k) {
    if (partition_.sizes()[k] < 2) {
      TrainEvent ev;
      ev.type = "warn";
      ev.epoch = epoch_;
      ev.cluster = static_cast<int>(k);
      ev.message = "cluster has fewer than 2 samples; skipped when batching";
      events_.push_back(ev);
    }
  }
  check_invariants();
}

void Trainer::enter_finetune_phase() {
  finetuning_ = true;
  TrainEvent ev;
  ev.type = "phase";
  ev.epoch = epoch_;
  ev.phase = "finetune";
  ev.cluster_count = partition_.cluster_count;
  events_.push_back(ev);
}

void Trainer::run(const EpochCallback& on_epoch) {
  for (epoch_ = 1; epoch_ <= config_.total_epochs; ++epoch_) {
    if (!finetuning_ && config_.finetune_start_epoch >= 0 &&
        epoch_ >= config_.finetune_start_epoch) {
      enter_finetune_phase();
    }
    train_epoch();
    if (epoch_ % config_.epochs_between_divisions == 0) division_step();
    if (on_epoch) on_epoch(*this, epoch_);
  }
  epoch_ = config_.total_epochs;
}

void Trainer::check_invariants() const {
  partition_.validate();
  if (partition_.cluster_count != masks_.count()) {
    throw std::logic_error("partition/mask cardinality out of lockstep");
  }
  if ((config_.division_mode == DivisionMode::kProgressive ||
       config_.division_mode == DivisionMode::kRandomSplits) &&
      (1 << partition_.depth) != partition_.cluster_count) {
    throw std::logic_error("progressive partition must have K = 2^depth");
  }
  if (static_cast<Eigen::Index>(partition_.assignment.size()) != data_.size()) {
    throw std::logic_error("partition does not cover the dataset");
  }
}

std::string checkpoint_to_json(const EmbeddingNetwork& net, const MaskSet& masks) {
  nlohmann::ordered_json j;
  j["format"] = "dcml-checkpoint-v1";
  nlohmann::ordered_json jnet;
  jnet["input_dim"] = net.input_dim();
  jnet["hidden"] = net.hidden_dims();
  jnet["output_dim"] = net.output_dim();
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layer(l);
    nlohmann::ordered_json jl;
    jl["rows"] = layer.weight.rows();
    jl["cols"] = layer.weight.cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    jl["weight"] = w;
    jl["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back(jl);
  }
  jnet["layers"] = layers;
  j["network"] = jnet;

  nlohmann::ordered_json jm;
  jm["mode"] = to_string(masks.mode);
  jm["depth"] = masks.depth;
  jm["count"] = masks.count();
  jm["dim"] = masks.dim();
  std::vector<double> raw;
  raw.reserve(static_cast<std::size_t>(masks.raw.size()));
  for (Eigen::Index r = 0; r < masks.raw.rows(); ++r) {
    for (Eigen::Index c = 0; c < masks.raw.cols(); ++c) raw.push_back(masks.raw(r, c));
  }
  jm["raw"] = raw;
  j["masks"] = jm;
  return j.dump(2);
}

void checkpoint_from_json(const std::string& text, EmbeddingNetwork& net, MaskSet& masks) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "dcml-checkpoint-v1") {
    throw std::runtime_error("checkpoint: unknown format tag");
  }
  const auto& jnet = j.at("network");
  net = EmbeddingNetwork(jnet.at("input_dim").get<int>(),
                         jnet.at("hidden").get<std::vector<int>>(),
                         jnet.at("output_dim").get<int>(), 0);
  const auto& layers = jnet.at("layers");
  if (layers.size() != net.layer_count()) throw std::runtime_error("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& layer = net.layer(l);
    const auto& jl = layers[l];
    const auto rows = jl.at("rows").get<Eigen::Index>();
    const auto cols = jl.at("cols").get<Eigen::Index>();
    if (rows != layer.weight.rows() || cols != layer.weight.cols()) {
      throw std::runtime_error("checkpoint: layer shape mismatch");
    }
    const auto w = jl.at("weight").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
      throw std::runtime_error("checkpoint: weight size mismatch");
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        layer.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
    }
    const auto b = jl.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(b.size()) != layer.bias.size()) {
      throw std::runtime_error("checkpoint: bias size mismatch");
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = b[static_cast<std::size_t>(r)];
  }

  const auto& jm = j.at("masks");
  masks.mode = mask_mode_from_string(jm.at("mode").get<std::string>());
  masks.depth = jm.at("depth").get<int>();
  const auto count = jm.at("count").get<Eigen::Index>();
  const auto dim = jm.at("dim").get<Eigen::Index>();
  const auto raw = jm.at("raw").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(raw.size()) != count * dim) {
    throw std::runtime_error("checkpoint: mask size mismatch");
  }
  masks.raw.resize(count, dim);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) masks.raw(r, c) = raw[static_cast<std::size_t>(r * dim + c)];
  }
}

void save_checkpoint(const EmbeddingNetwork& net, const MaskSet& masks, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << checkpoint_to_json(net, masks) << '\n';
}

void load_checkpoint(const std::string& path, EmbeddingNetwork& net, MaskSet& masks) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  checkpoint_from_json(ss.str(), net, masks);
}

Eigen::MatrixXd embed_for_eval(const EmbeddingNetwork& net, const MaskSet& masks,
                               const Eigen::MatrixXd& features, int subspace) {
  const Eigen::MatrixXd raw = net.forward(features);
  const Eigen::VectorXd mask =
      subspace < 0 ? masks.conquer() : Eigen::VectorXd(masks.raw.row(subspace).transpose());
  return masked_unit_rows(raw, mask).unit;
}

}  // namespace dcml
