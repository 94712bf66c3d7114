#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "../support.hpp"
#include "mole/neuralnet.hpp"

using namespace mole;
using mole::testing::fd_gradient;
using mole::testing::random_params;
using mole::testing::random_window;
using mole::testing::rel_err;

namespace {

NetArchitecture arch_of(int in, std::vector<int> hidden, int out) {
  NetArchitecture a;
  a.input_dim = in;
  a.output_dim = out;
  a.hidden_dims = std::move(hidden);
  return a;
}

// Layer-by-layer loops, no Eigen products.
Eigen::VectorXd naive_forward(const ParamVector& p, const Eigen::VectorXd& x) {
  const auto d = p.arch().layer_dims();
  std::vector<double> a(x.data(), x.data() + x.size());
  const double* v = p.values().data();
  for (std::size_t l = 0; l + 1 < d.size(); ++l) {
    const int rows = d[l + 1], cols = d[l];
    std::vector<double> z(rows, 0.0);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) z[i] += v[j * rows + i] * a[j];
      z[i] += v[rows * cols + i];
    }
    v += rows * cols + rows;
    if (l + 2 < d.size())
      for (double& zi : z) zi = std::max(zi, 0.0);
    a = std::move(z);
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
}

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

TEST_CASE("forward: zero parameters give zero output") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto arch = mole::testing::random_arch(rng);
    const auto p = ParamVector::zeros(arch);
    Eigen::VectorXd x = Eigen::VectorXd::Random(arch.input_dim);
    CHECK(forward(p, x).isZero(0.0));
  }
}

TEST_CASE("forward: identity through one hidden unit") {
  const auto arch = arch_of(1, {1}, 1);
  Eigen::VectorXd v(4);
  v << 1.0, 0.0, 1.0, 0.0;
  const ParamVector p(arch, v);
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(forward(p, x)[0] == doctest::Approx(2.0));
  x << -2.0;
  CHECK(forward(p, x)[0] == doctest::Approx(0.0));
}

TEST_CASE("forward: matches a loop implementation") {
  Rng rng(2);
  const auto arch = arch_of(3, {4}, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_params(arch, rng);
    const Eigen::VectorXd x = Eigen::VectorXd::Random(3);
    CHECK((forward(p, x) - naive_forward(p, x)).norm() < 1e-12);
  }
}

TEST_CASE("forward_batch equals column-wise forward") {
  Rng rng(3);
  const auto arch = arch_of(4, {5, 3}, 2);
  const auto p = random_params(arch, rng);
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(4, 9);
  const Eigen::MatrixXd Y = forward_batch(p, X);
  for (int c = 0; c < X.cols(); ++c) CHECK((Y.col(c) - forward(p, X.col(c))).norm() < 1e-13);
}

TEST_CASE("forward rejects a wrong input width") {
  const auto p = ParamVector::zeros(arch_of(3, {2}, 1));
  CHECK_THROWS_AS(forward(p, Eigen::VectorXd::Zero(2)), ArgumentError);
}

TEST_CASE("ParamVector validates length and finiteness") {
  const auto arch = arch_of(2, {3}, 1);
  CHECK(arch.param_count() == 3 * 2 + 3 + 1 * 3 + 1);
  CHECK_THROWS_AS(ParamVector(arch, Eigen::VectorXd::Zero(5)), ArgumentError);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(arch.param_count());
  v[2] = std::nan("");
  CHECK_THROWS_AS(ParamVector(arch, v), NumericalError);
  CHECK_THROWS_AS(ParamVector::zeros(arch_of(0, {3}, 1)), ArgumentError);
}

TEST_CASE("nll: zero residual leaves only the normalizer") {
  const auto arch = arch_of(2, {3}, 2);
  const auto p = ParamVector::zeros(arch);
  const int K = 7;
  TransitionWindow w{Eigen::MatrixXd::Random(2, K), Eigen::MatrixXd::Zero(2, K)};
  CHECK(nll(p, w, {1.0}) == doctest::Approx(K * 2 * kLogSqrt2Pi));
}

TEST_CASE("nll: a single unit residual") {
  const auto p = ParamVector::zeros(arch_of(1, {}, 1));
  TransitionWindow w{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1)};
  CHECK(nll(p, w, {1.0}) == doctest::Approx(0.5 + kLogSqrt2Pi));
}

TEST_CASE("nll: equals the summed negative log density") {
  Rng rng(4);
  const auto arch = arch_of(3, {4}, 2);
  for (double var : {0.1, 1.0, 3.5}) {
    const auto p = random_params(arch, rng);
    const auto w = random_window(arch, 6, rng);
    const Eigen::MatrixXd mu = forward_batch(p, w.inputs);
    double want = 0.0;
    for (int c = 0; c < 6; ++c)
      for (int r = 0; r < 2; ++r) {
        const double e = w.targets(r, c) - mu(r, c);
        want -= -0.5 * std::log(2.0 * std::numbers::pi * var) - e * e / (2.0 * var);
      }
    CHECK(nll(p, w, {var}) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("nll is invariant to the order of window columns") {
  Rng rng(5);
  const auto arch = arch_of(3, {4}, 2);
  const auto p = random_params(arch, rng);
  const auto w = random_window(arch, 10, rng);
  std::vector<int> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  TransitionWindow s{w.inputs, w.targets};
  for (int c = 0; c < 10; ++c) {
    s.inputs.col(c) = w.inputs.col(perm[c]);
    s.targets.col(c) = w.targets.col(perm[c]);
  }
  CHECK(nll(p, s, {1.0}) == doctest::Approx(nll(p, w, {1.0})).epsilon(1e-13));
}

TEST_CASE("gradient: zero residual gives zero output-layer gradient") {
  Rng rng(6);
  const auto arch = arch_of(2, {3}, 2);
  const auto p = random_params(arch, rng);
  TransitionWindow w{Eigen::MatrixXd::Random(2, 5), Eigen::MatrixXd()};
  w.targets = forward_batch(p, w.inputs);
  const auto g = grad_nll(p, w, {1.0});
  CHECK(g.weight(1).isZero(1e-14));
  CHECK(g.bias(1).isZero(1e-14));
}

TEST_CASE("gradient: linear model y = w x") {
  const auto arch = arch_of(1, {}, 1);
  Eigen::VectorXd v(2);
  v << 0.0, 0.0;
  const ParamVector p(arch, v);
  TransitionWindow w{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 2.0)};
  const auto g = grad_nll(p, w, {1.0});
  // d/dw of (wx - y)^2 / 2 at w = 0, x = 1, y = 2.
  CHECK(g.values()[0] == doctest::Approx(-2.0));
  CHECK(g.values()[1] == doctest::Approx(-2.0));
}

TEST_CASE("gradient matches central differences") {
  Rng rng(7);
  const auto arch = arch_of(5, {8, 8}, 3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_params(arch, rng, 0.5);
    const auto w = random_window(arch, 12, rng);
    const LikelihoodConfig lik{0.7};
    const auto f = [&](const Eigen::VectorXd& x) { return nll(p.with_values(x), w, lik); };
    const Eigen::VectorXd fd = fd_gradient(f, p.values(), 1e-6);
    const auto [loss, g] = nll_and_grad(p, w, lik);
    CHECK(loss == doctest::Approx(nll(p, w, lik)).epsilon(1e-14));
    CHECK(rel_err(g.values(), fd) < 1e-5);
  }
}

TEST_CASE("gradient is additive over window columns") {
  Rng rng(8);
  const auto arch = arch_of(3, {4}, 2);
  const auto p = random_params(arch, rng);
  const auto w = random_window(arch, 8, rng);
  TransitionWindow a{w.inputs.leftCols(3), w.targets.leftCols(3)};
  TransitionWindow b{w.inputs.rightCols(5), w.targets.rightCols(5)};
  const Eigen::VectorXd sum = grad_nll(p, a, {1.0}).values() + grad_nll(p, b, {1.0}).values();
  CHECK(rel_err(grad_nll(p, w, {1.0}).values(), sum) < 1e-12);
}

TEST_CASE("sgd_step: examples") {
  const auto arch = arch_of(1, {}, 1);
  const ParamVector p(arch, Eigen::Vector2d(1.0, 2.0));
  const ParamVector g(arch, Eigen::Vector2d(1.0, 1.0));
  CHECK(sgd_step(p, g, 0.5, 0.0).values() == p.values());
  CHECK(sgd_step(p, g, 0.01, 1.0).values().isApprox(Eigen::Vector2d(0.99, 1.99)));
  CHECK(sgd_step(p, g, 0.1, 0.5).values().isApprox(Eigen::Vector2d(0.95, 1.95)));
}

TEST_CASE("sgd_step: two steps on a linear model compose") {
  const auto arch = arch_of(1, {}, 1);
  const ParamVector p(arch, Eigen::Vector2d(0.3, -0.2));
  const ParamVector g(arch, Eigen::Vector2d(0.7, 0.4));
  const auto twice = sgd_step(sgd_step(p, g, 0.1, 1.0), g, 0.1, 1.0);
  CHECK(twice.values().isApprox(sgd_step(p, g, 0.2, 1.0).values(), 1e-14));
}

TEST_CASE("sgd_step: a small enough step decreases the nll") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto arch = mole::testing::random_arch(rng);
    const auto p = random_params(arch, rng);
    const auto w = random_window(arch, 6, rng);
    const auto [loss, g] = nll_and_grad(p, w, {1.0});
    if (g.values().norm() < 1e-10) continue;
    double lr = 0.1;
    bool decreased = false;
    for (int halving = 0; halving <= 20 && !decreased; ++halving, lr *= 0.5)
      decreased = nll(sgd_step(p, g, lr, 1.0), w, {1.0}) < loss;
    CHECK(decreased);
  }
}

TEST_CASE("sgd_step: rejects bad inputs") {
  const auto arch = arch_of(1, {}, 1);
  const ParamVector p(arch, Eigen::Vector2d(1.0, 2.0));
  const ParamVector g(arch, Eigen::Vector2d(1.0, 1.0));
  CHECK_THROWS_AS(sgd_step(p, g, -0.1, 1.0), ArgumentError);
  CHECK_THROWS_AS(sgd_step(p, g, 0.1, 1.5), ArgumentError);
  CHECK_THROWS_AS(sgd_step(p, ParamVector::zeros(arch_of(1, {1}, 1)), 0.1, 1.0), ArgumentError);
  CHECK_THROWS_AS(ParamVector(arch, Eigen::Vector2d(INFINITY, 0.0)), NumericalError);
}

TEST_CASE("templated on float") {
  const auto arch = arch_of(2, {3}, 1);
  Rng rng(10);
  const auto pd = random_params(arch, rng);
  const ParamVectorT<float> pf(arch, pd.values().cast<float>());
  const Eigen::Vector2d x(0.3, -0.4);
  CHECK(forward(pf, Eigen::Vector2f(x.cast<float>()))[0] == doctest::Approx(forward(pd, x)[0]).epsilon(1e-5));
}
