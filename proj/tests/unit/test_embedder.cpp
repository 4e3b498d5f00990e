#include <doctest.h>

#include <cmath>

#include "dcml/embedder.hpp"
#include "oracles.hpp"

using namespace dcml;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  }
  return m;
}

std::vector<double*> network_params(EmbeddingNetwork& net) {
  std::vector<double*> out;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& layer = net.layer(l);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) out.push_back(layer.weight.data() + i);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) out.push_back(layer.bias.data() + i);
  }
  return out;
}

std::vector<double> flatten(const EmbeddingNetwork::Gradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weight.size(); ++l) {
    for (Eigen::Index i = 0; i < g.weight[l].size(); ++i) out.push_back(g.weight[l].data()[i]);
    for (Eigen::Index i = 0; i < g.bias[l].size(); ++i) out.push_back(g.bias[l].data()[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("forward: zero parameters give zero embeddings") {
  EmbeddingNetwork net(4, {5}, 3, 1);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    net.layer(l).weight.setZero();
    net.layer(l).bias.setZero();
  }
  Rng rng = make_rng(0);
  const Eigen::MatrixXd y = net.forward(random_matrix(6, 4, rng));
  CHECK(y.isZero(0.0));
}

TEST_CASE("forward: single identity layer is the identity map") {
  EmbeddingNetwork net(4, {}, 4, 1);
  net.layer(0).weight = Eigen::MatrixXd::Identity(4, 4);
  net.layer(0).bias.setZero();
  Rng rng = make_rng(5);
  const Eigen::MatrixXd x = random_matrix(3, 4, rng);
  CHECK(net.forward(x) == x);
}

TEST_CASE("forward: matches scalar re-evaluation of the affine+rectifier chain") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    EmbeddingNetwork net(6, {7, 5}, 4, seed);
    Rng rng = make_rng(seed, 99);
    const Eigen::MatrixXd x = random_matrix(8, 6, rng);
    const Eigen::MatrixXd got = net.forward(x);
    const Eigen::MatrixXd want = oracle::mlp_forward_scalar(net, x);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward: dimension mismatch throws") {
  EmbeddingNetwork net(4, {5}, 3, 1);
  CHECK_THROWS_AS(net.forward(Eigen::MatrixXd::Zero(2, 5)), std::invalid_argument);
}

TEST_CASE("backward: zero upstream gives zero gradients, stale cache throws") {
  EmbeddingNetwork net(4, {5}, 3, 2);
  Rng rng = make_rng(7);
  EmbeddingNetwork::ForwardCache cache;
  net.forward(random_matrix(5, 4, rng), &cache);
  const auto g = net.backward(cache, Eigen::MatrixXd::Zero(5, 3));
  for (double v : flatten(g)) CHECK(v == 0.0);

  EmbeddingNetwork::ForwardCache empty;
  CHECK_THROWS_AS(net.backward(empty, Eigen::MatrixXd::Zero(5, 3)), std::runtime_error);
}

TEST_CASE("backward: parameter gradients match central finite differences") {
  EmbeddingNetwork net(4, {6}, 3, 3);
  Rng rng = make_rng(13);
  const Eigen::MatrixXd x = random_matrix(5, 4, rng);
  const Eigen::MatrixXd c = random_matrix(5, 3, rng);  // fixed linear readout

  auto value = [&]() { return (net.forward(x).cwiseProduct(c)).sum(); };

  EmbeddingNetwork::ForwardCache cache;
  net.forward(x, &cache);
  const std::vector<double> analytic = flatten(net.backward(cache, c));
  const std::vector<double> fd = oracle::fd_gradient(value, network_params(net), 1e-5);
  CHECK(oracle::grad_rel_error(analytic, fd) < 1e-4);
}

TEST_CASE("backward: input gradient matches finite differences") {
  EmbeddingNetwork net(4, {6, 5}, 3, 4);
  Rng rng = make_rng(17);
  Eigen::MatrixXd x = random_matrix(3, 4, rng);
  const Eigen::MatrixXd c = random_matrix(3, 3, rng);

  auto value = [&]() { return (net.forward(x).cwiseProduct(c)).sum(); };
  std::vector<double*> params;
  for (Eigen::Index i = 0; i < x.size(); ++i) params.push_back(x.data() + i);
  const std::vector<double> fd = oracle::fd_gradient(value, params, 1e-5);

  EmbeddingNetwork::ForwardCache cache;
  net.forward(x, &cache);
  Eigen::MatrixXd input_grad;
  net.backward(cache, c, &input_grad);
  std::vector<double> analytic(input_grad.data(), input_grad.data() + input_grad.size());
  CHECK(oracle::grad_rel_error(analytic, fd) < 1e-4);
}

TEST_CASE("normalize_rows: 3-4-5 triangle and idempotence") {
  Eigen::MatrixXd rows(1, 2);
  rows << 3.0, 4.0;
  const RowNormResult r = normalize_rows(rows);
  CHECK(r.unit(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.unit(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.norms[0] == doctest::Approx(5.0));

  const RowNormResult again = normalize_rows(r.unit);
  CHECK((again.unit - r.unit).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(again.unit.row(0).norm() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("normalize_rows: zero row stays zero and is flagged") {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2, 3);
  rows.row(1) << 1.0, 0.0, 0.0;
  const RowNormResult r = normalize_rows(rows);
  CHECK(r.unit.row(0).isZero(0.0));
  REQUIRE(r.zero_rows.size() == 1);
  CHECK(r.zero_rows[0] == 0);
}

TEST_CASE("normalize_rows gradient on (3,4) matches finite differences") {
  Eigen::MatrixXd rows(1, 2);
  rows << 3.0, 4.0;
  Eigen::MatrixXd upstream(1, 2);
  upstream << 0.7, -0.2;

  auto value = [&]() { return (normalize_rows(rows).unit.cwiseProduct(upstream)).sum(); };
  std::vector<double*> params{rows.data(), rows.data() + 1};
  const std::vector<double> fd = oracle::fd_gradient(value, params, 1e-5);

  const Eigen::MatrixXd g = normalize_rows_backward(rows, upstream);
  CHECK(oracle::grad_rel_error({g(0, 0), g(0, 1)}, fd) < 1e-4);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  Eigen::VectorXd w(3);
  w << 1.0, -2.0, 0.5;
  const Eigen::VectorXd before = w;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
  AdamOptimizer opt(0.1);
  opt.step({{w.data(), g.data(), 3, 1.0}});
  CHECK(w == before);
}

TEST_CASE("adam: first step on a scalar matches the hand-evaluated update") {
  // m=0.1, v=1e-3, bias-corrected to 1 and 1; delta = lr/(1+eps*?) ~ lr
  double w = 1.0;
  double g = 1.0;
  AdamOptimizer opt(0.1);
  opt.step({{&w, &g, 1, 1.0}});
  const double expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
  CHECK(w == doctest::Approx(expected).epsilon(1e-14));
  CHECK(1.0 - w == doctest::Approx(0.1).epsilon(1e-6));  // decreases by ~lr
  CHECK(opt.step_count(0) == 1);
}

TEST_CASE("adam: learning-rate scale multiplies the step") {
  double w1 = 1.0, w2 = 1.0;
  double g = 1.0;
  AdamOptimizer opt(0.01);
  opt.step({{&w1, &g, 1, 1.0}, {&w2, &g, 1, 100.0}});
  CHECK((1.0 - w2) == doctest::Approx(100.0 * (1.0 - w1)).epsilon(1e-9));
}

TEST_CASE("adam: identical calls from identical states produce identical results") {
  auto run = []() {
    Eigen::VectorXd w(4);
    w << 0.1, 0.2, 0.3, 0.4;
    AdamOptimizer opt(0.05);
    for (int i = 0; i < 10; ++i) {
      Eigen::VectorXd g = w * 0.5;
      opt.step({{w.data(), g.data(), 4, 1.0}});
    }
    return w;
  };
  CHECK(run() == run());
}

TEST_CASE("adam: non-finite gradient rejects the step") {
  double w = 1.0;
  double g = std::numeric_limits<double>::quiet_NaN();
  AdamOptimizer opt(0.1);
  CHECK_THROWS_AS(opt.step({{&w, &g, 1, 1.0}}), std::runtime_error);
  CHECK(w == 1.0);
}

TEST_CASE("dropout: off at p=0, masks activations at p>0, eval path unaffected") {
  EmbeddingNetwork net(4, {16}, 3, 9);
  Rng rng = make_rng(23);
  const Eigen::MatrixXd x = random_matrix(4, 4, rng);

  Rng d0 = make_rng(1), d1 = make_rng(1);
  EmbeddingNetwork::ForwardCache c0;
  const Eigen::MatrixXd plain = net.forward_train(x, 0.0, d0, &c0);
  CHECK(plain == net.forward(x));
  CHECK(c0.dropout_scale.size() == 0);

  EmbeddingNetwork::ForwardCache c1;
  const Eigen::MatrixXd dropped = net.forward_train(x, 0.5, d1, &c1);
  CHECK(dropped != plain);
  CHECK(c1.dropout_scale.size() > 0);
}
