#pragma once

// Fixtures shared by the unit and acceptance tests.

#include <Eigen/Dense>

#include <cmath>
#include <functional>

#include "mole/environments.hpp"
#include "mole/neuralnet.hpp"

namespace mole::testing {

inline NetArchitecture random_arch(Rng& rng, int max_in = 4, int max_out = 3) {
  std::uniform_int_distribution<int> in(1, max_in), out(1, max_out), width(2, 6), depth(1, 2);
  NetArchitecture a;
  a.input_dim = in(rng);
  a.output_dim = out(rng);
  a.hidden_dims.clear();
  const int L = depth(rng);
  for (int l = 0; l < L; ++l) a.hidden_dims.push_back(width(rng));
  return a;
}

/// Weights and biases uniform in [-scale, scale].
inline ParamVector random_params(const NetArchitecture& arch, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Eigen::VectorXd v(arch.param_count());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = U(rng);
  return ParamVector(arch, v);
}

inline TransitionWindow random_window(const NetArchitecture& arch, int k, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  TransitionWindow w{Eigen::MatrixXd(arch.input_dim, k), Eigen::MatrixXd(arch.output_dim, k)};
  for (Eigen::Index i = 0; i < w.inputs.size(); ++i) w.inputs.data()[i] = N(rng);
  for (Eigen::Index i = 0; i < w.targets.size(); ++i) w.targets.data()[i] = N(rng);
  return w;
}

/// Central differences of a scalar function of the flat parameters.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

/// A one-hidden-layer ReLU net that reproduces a SwitchLin mode exactly in
/// identity-normalized units: hidden = relu([x; -x]), output = M (h+ - h-),
/// with M = [A - I, B] mapping x = [s; a] to the state increment.
inline ParamVector exact_linear_net(const LinearTask& task) {
  const int ds = static_cast<int>(task.A.rows()), da = static_cast<int>(task.B.cols());
  const int in = ds + da;
  NetArchitecture arch;
  arch.input_dim = in;
  arch.output_dim = ds;
  arch.hidden_dims = {2 * in};
  Eigen::MatrixXd M(ds, in);
  M << task.A - Eigen::MatrixXd::Identity(ds, ds), task.B;
  Eigen::MatrixXd W1(2 * in, in);
  W1 << Eigen::MatrixXd::Identity(in, in), -Eigen::MatrixXd::Identity(in, in);
  Eigen::MatrixXd W2(ds, 2 * in);
  W2 << M, -M;
  Eigen::VectorXd v(arch.param_count());
  v << Eigen::Map<const Eigen::VectorXd>(W1.data(), W1.size()), Eigen::VectorXd::Zero(2 * in),
      Eigen::Map<const Eigen::VectorXd>(W2.data(), W2.size()), Eigen::VectorXd::Zero(ds);
  return ParamVector(arch, v);
}

}  // namespace mole::testing
