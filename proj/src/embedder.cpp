#include "dcml/embedder.hpp"

#include <cmath>
#include <stdexcept>

namespace dcml {

void EmbeddingNetwork::Gradients::set_zero() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
}

bool EmbeddingNetwork::Gradients::all_finite() const {
  for (const auto& w : weight) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : bias) {
    if (!b.allFinite()) return false;
  }
  return true;
}

EmbeddingNetwork::EmbeddingNetwork(int in_dim, const std::vector<int>& hidden_dims, int out_dim,
                                   std::uint64_t seed)
    : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim < 1 || out_dim < 1) throw std::invalid_argument("network dims must be positive");
  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("hidden width must be positive");
    dims.push_back(h);
  }
  dims.push_back(out_dim);

  Rng rng = make_rng(seed, 11);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    Layer layer;
    layer.weight.resize(fan_out, fan_in);
    layer.bias.resize(fan_out);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = uniform(rng);
    }
    for (int r = 0; r < fan_out; ++r) layer.bias[r] = uniform(rng);
    layers_.push_back(std::move(layer));
  }
}

std::vector<int> EmbeddingNetwork::hidden_dims() const {
  std::vector<int> dims;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    dims.push_back(static_cast<int>(layers_[l].weight.rows()));
  }
  return dims;
}

Eigen::Index EmbeddingNetwork::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Eigen::MatrixXd EmbeddingNetwork::forward(const Eigen::MatrixXd& batch, ForwardCache* cache) const {
  if (batch.cols() != in_dim_) {
    throw std::invalid_argument("forward: batch feature dim " + std::to_string(batch.cols()) +
                                " != network input dim " + std::to_string(in_dim_));
  }
  if (cache) {
    cache->input = batch;
    cache->hidden.clear();
    cache->dropout_scale.resize(0, 0);
    cache->valid = true;
  }
  Eigen::MatrixXd act = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd pre = (act * layers_[l].weight.transpose()).rowwise() + layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) {
      act = pre.cwiseMax(0.0);
      if (cache) cache->hidden.push_back(act);
    } else {
      act = std::move(pre);
    }
  }
  return act;
}

Eigen::MatrixXd EmbeddingNetwork::forward_train(const Eigen::MatrixXd& batch, double dropout_p,
                                                Rng& rng, ForwardCache* cache) const {
  if (dropout_p <= 0.0 || layers_.size() < 2) return forward(batch, cache);
  if (dropout_p >= 1.0) throw std::invalid_argument("dropout probability must be < 1");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  forward(batch, &c);

  // Inverted dropout on the last hidden activation, then re-run the output layer.
  Eigen::MatrixXd& last_hidden = c.hidden.back();
  const double keep = 1.0 - dropout_p;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  c.dropout_scale.resize(last_hidden.rows(), last_hidden.cols());
  for (Eigen::Index i = 0; i < last_hidden.rows(); ++i) {
    for (Eigen::Index j = 0; j < last_hidden.cols(); ++j) {
      c.dropout_scale(i, j) = uniform(rng) < keep ? 1.0 / keep : 0.0;
    }
  }
  last_hidden = last_hidden.cwiseProduct(c.dropout_scale);
  const Layer& out = layers_.back();
  return (last_hidden * out.weight.transpose()).rowwise() + out.bias.transpose();
}

EmbeddingNetwork::Gradients EmbeddingNetwork::backward(const ForwardCache& cache,
                                                       const Eigen::MatrixXd& upstream_grad,
                                                       Eigen::MatrixXd* input_grad) const {
  if (!cache.valid) throw std::runtime_error("backward called without a cached forward pass");
  if (cache.hidden.size() + 1 != layers_.size()) {
    throw std::runtime_error("backward: cache does not match network depth");
  }
  if (upstream_grad.cols() != out_dim_ || upstream_grad.rows() != cache.input.rows()) {
    throw std::invalid_argument("backward: upstream gradient shape mismatch");
  }

  Gradients grads = zero_gradients();
  Eigen::MatrixXd delta = upstream_grad;  // grad wrt layer pre-activation
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Eigen::MatrixXd& below = (l == 0) ? cache.input : cache.hidden[l - 1];
    grads.weight[l] = delta.transpose() * below;
    grads.bias[l] = delta.colwise().sum().transpose();
    if (l == 0) {
      if (input_grad) *input_grad = delta * layers_[0].weight;
      break;
    }
    Eigen::MatrixXd down = delta * layers_[l].weight;
    if (l == layers_.size() - 1 && cache.dropout_scale.size() > 0) {
      down = down.cwiseProduct(cache.dropout_scale);
    }
    // rectifier subgradient: 0 where the cached activation is 0
    delta = down.cwiseProduct((cache.hidden[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return grads;
}

EmbeddingNetwork::Gradients EmbeddingNetwork::zero_gradients() const {
  Gradients g;
  g.weight.reserve(layers_.size());
  g.bias.reserve(layers_.size());
  for (const auto& l : layers_) {
    g.weight.emplace_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

RowNormResult normalize_rows(const Eigen::MatrixXd& rows) {
  RowNormResult out;
  out.unit.resize(rows.rows(), rows.cols());
  out.norms.resize(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double n = rows.row(i).norm();
    out.norms[i] = n;
    if (n <= kNormEpsilon) out.zero_rows.push_back(static_cast<int>(i));
    out.unit.row(i) = rows.row(i) / std::max(n, kNormEpsilon);
  }
  return out;
}

Eigen::MatrixXd normalize_rows_backward(const Eigen::MatrixXd& raw_rows,
                                        const Eigen::MatrixXd& unit_grad) {
  Eigen::MatrixXd out(raw_rows.rows(), raw_rows.cols());
  for (Eigen::Index i = 0; i < raw_rows.rows(); ++i) {
    const double n = raw_rows.row(i).norm();
    const double guarded = std::max(n, kNormEpsilon);
    if (n <= kNormEpsilon) {
      out.row(i) = unit_grad.row(i) / guarded;  // guard branch: u = v / eps
      continue;
    }
    const Eigen::RowVectorXd u = raw_rows.row(i) / guarded;
    out.row(i) = (unit_grad.row(i) - u * unit_grad.row(i).dot(u)) / guarded;
  }
  return out;
}

void AdamOptimizer::step(const std::vector<Block>& blocks) {
  for (const auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.size; ++i) {
      if (!std::isfinite(b.grad[i])) {
        throw std::runtime_error("adam: non-finite gradient, step rejected");
      }
    }
  }
  if (slots_.size() < blocks.size()) slots_.resize(blocks.size());
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    const Block& b = blocks[s];
    Slot& slot = slots_[s];
    if (slot.m.size() != b.size) {
      slot.m = Eigen::VectorXd::Zero(b.size);
      slot.v = Eigen::VectorXd::Zero(b.size);
      slot.t = 0;
    }
    ++slot.t;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(slot.t));
    const double rate = lr_ * b.lr_scale;
    for (Eigen::Index i = 0; i < b.size; ++i) {
      const double g = b.grad[i];
      slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * g;
      slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * g * g;
      const double m_hat = slot.m[i] / bc1;
      const double v_hat = slot.v[i] / bc2;
      b.data[i] -= rate * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

long AdamOptimizer::step_count(std::size_t slot) const {
  return slot < slots_.size() ? slots_[slot].t : 0;
}

void AdamOptimizer::reset_slot(std::size_t slot) {
  if (slot < slots_.size()) {
    slots_[slot].m.resize(0);
    slots_[slot].v.resize(0);
    slots_[slot].t = 0;
  }
}

}  // namespace dcml
