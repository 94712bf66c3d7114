#pragma once

// Fixed-architecture ReLU multilayer perceptron with a constant-variance
// Gaussian likelihood, hand-written reverse-mode gradients and SGD updates.
//
// Parameter layout (flat, contiguous): for every layer l in order, the weight
// matrix W_l (rows = fan-out, cols = fan-in, column-major) followed by the bias
// b_l. Hidden layers use ReLU, the output layer is linear.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "mole/common.hpp"

namespace mole {

struct NetArchitecture {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden_dims{500, 500, 500};

  void validate() const {
    if (input_dim < 1 || output_dim < 1)
      throw ArgumentError("NetArchitecture: input/output dims must be >= 1");
    for (int h : hidden_dims)
      if (h < 1) throw ArgumentError("NetArchitecture: hidden dims must be >= 1");
  }

  /// [input, hidden..., output]
  std::vector<int> layer_dims() const {
    std::vector<int> d;
    d.reserve(hidden_dims.size() + 2);
    d.push_back(input_dim);
    d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
    d.push_back(output_dim);
    return d;
  }

  int num_layers() const { return static_cast<int>(hidden_dims.size()) + 1; }

  Eigen::Index param_count() const {
    const auto d = layer_dims();
    Eigen::Index n = 0;
    for (std::size_t l = 0; l + 1 < d.size(); ++l)
      n += static_cast<Eigen::Index>(d[l + 1]) * (d[l] + 1);
    return n;
  }

  /// Offset of W_l inside the flat vector; b_l follows W_l directly.
  Eigen::Index weight_offset(int layer) const {
    const auto d = layer_dims();
    Eigen::Index n = 0;
    for (int l = 0; l < layer; ++l) n += static_cast<Eigen::Index>(d[l + 1]) * (d[l] + 1);
    return n;
  }

  friend bool operator==(const NetArchitecture&, const NetArchitecture&) = default;
};

struct LikelihoodConfig {
  double variance = 1.0;

  void validate() const {
    if (!(variance > 0.0) || !std::isfinite(variance))
      throw ArgumentError("LikelihoodConfig: variance must be positive and finite");
  }
};

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Parameters of one network. Values are fixed at construction; every update
/// produces a new vector, so snapshots and rollbacks are plain copies.
template <typename Scalar>
class ParamVectorT {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  ParamVectorT(NetArchitecture arch, Vector values)
      : arch_(std::make_shared<const NetArchitecture>(std::move(arch))), values_(std::move(values)) {
    check();
  }

  ParamVectorT(std::shared_ptr<const NetArchitecture> arch, Vector values)
      : arch_(std::move(arch)), values_(std::move(values)) {
    check();
  }

  static ParamVectorT zeros(const NetArchitecture& arch) {
    arch.validate();
    return ParamVectorT(arch, Vector::Zero(arch.param_count()));
  }

  /// He-uniform weights, zero biases.
  static ParamVectorT random(const NetArchitecture& arch, Rng& rng) {
    arch.validate();
    Vector v = Vector::Zero(arch.param_count());
    const auto d = arch.layer_dims();
    Eigen::Index off = 0;
    for (std::size_t l = 0; l + 1 < d.size(); ++l) {
      const double bound = std::sqrt(6.0 / d[l]);
      std::uniform_real_distribution<double> U(-bound, bound);
      const Eigen::Index nw = static_cast<Eigen::Index>(d[l + 1]) * d[l];
      for (Eigen::Index i = 0; i < nw; ++i) v[off + i] = static_cast<Scalar>(U(rng));
      off += nw + d[l + 1];
    }
    return ParamVectorT(arch, std::move(v));
  }

  const NetArchitecture& arch() const { return *arch_; }
  const std::shared_ptr<const NetArchitecture>& arch_ptr() const { return arch_; }
  const Vector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  Eigen::Map<const Matrix> weight(int layer) const {
    const auto d = arch_->layer_dims();
    return {values_.data() + arch_->weight_offset(layer), d[layer + 1], d[layer]};
  }
  Eigen::Map<const Vector> bias(int layer) const {
    const auto d = arch_->layer_dims();
    return {values_.data() + arch_->weight_offset(layer) + Eigen::Index(d[layer + 1]) * d[layer],
            d[layer + 1]};
  }

  /// Same architecture, new values.
  ParamVectorT with_values(Vector v) const { return ParamVectorT(arch_, std::move(v)); }

 private:
  void check() const {
    arch_->validate();
    if (values_.size() != arch_->param_count())
      throw ArgumentError("ParamVector: length " + std::to_string(values_.size()) +
                          " does not match architecture parameter count " +
                          std::to_string(arch_->param_count()));
    if (!values_.allFinite()) throw NumericalError("ParamVector: non-finite entries");
  }

  std::shared_ptr<const NetArchitecture> arch_;
  Vector values_;
};

/// K transitions stored column-wise: inputs is input_dim x K (state ++ action
/// per column), targets is output_dim x K.
template <typename Scalar>
struct TransitionWindowT {
  MatrixX<Scalar> inputs;
  MatrixX<Scalar> targets;

  Eigen::Index size() const { return inputs.cols(); }

  void validate() const {
    if (inputs.cols() < 1) throw ArgumentError("TransitionWindow: empty window");
    if (inputs.cols() != targets.cols())
      throw ArgumentError("TransitionWindow: inputs/targets column count differ");
  }
  void validate(const NetArchitecture& arch) const {
    validate();
    if (inputs.rows() != arch.input_dim || targets.rows() != arch.output_dim)
      throw ArgumentError("TransitionWindow: widths do not match architecture");
  }
};

using ParamVector = ParamVectorT<double>;
using TransitionWindow = TransitionWindowT<double>;

namespace detail {

template <typename Scalar, typename Derived>
void check_input_rows(const ParamVectorT<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != p.arch().input_dim)
    throw ArgumentError("forward: input width " + std::to_string(x.rows()) +
                        " != architecture input_dim " + std::to_string(p.arch().input_dim));
}

/// Forward pass keeping every layer's pre-activation for backprop.
template <typename Scalar>
struct Activations {
  std::vector<MatrixX<Scalar>> pre;   // Z_l, one per layer
  std::vector<MatrixX<Scalar>> post;  // A_0 = X, A_l = relu(Z_l) for hidden l
};

template <typename Scalar, typename Derived>
Activations<Scalar> forward_cached(const ParamVectorT<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  check_input_rows(p, x);
  const int L = p.arch().num_layers();
  Activations<Scalar> act;
  act.pre.reserve(L);
  act.post.reserve(L);
  act.post.emplace_back(x);
  for (int l = 0; l < L; ++l) {
    MatrixX<Scalar> z = p.weight(l) * act.post.back();
    z.colwise() += p.bias(l);
    if (l + 1 < L) act.post.emplace_back(z.cwiseMax(Scalar(0)));
    act.pre.push_back(std::move(z));
  }
  return act;
}

}  // namespace detail

/// Batched mean dynamics: each column of `x` is one input.
template <typename Scalar, typename Derived>
MatrixX<Scalar> forward_batch(const ParamVectorT<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  detail::check_input_rows(p, x);
  const int L = p.arch().num_layers();
  MatrixX<Scalar> a = x;
  for (int l = 0; l < L; ++l) {
    MatrixX<Scalar> z = p.weight(l) * a;
    z.colwise() += p.bias(l);
    if (l + 1 < L)
      a = z.cwiseMax(Scalar(0));
    else
      a = std::move(z);
  }
  return a;
}

template <typename Scalar, typename Derived>
VectorX<Scalar> forward(const ParamVectorT<Scalar>& p, const Eigen::MatrixBase<Derived>& input) {
  if (input.cols() != 1) throw ArgumentError("forward: expected a single column vector");
  return forward_batch(p, input);
}

/// Negative Gaussian log-likelihood summed over the window, including the
/// normalizing constant 0.5*log(2*pi*variance) per output dimension per row.
template <typename Scalar>
Scalar nll(const ParamVectorT<Scalar>& p, const TransitionWindowT<Scalar>& w, const LikelihoodConfig& lik) {
  lik.validate();
  w.validate(p.arch());
  const MatrixX<Scalar> r = forward_batch(p, w.inputs) - w.targets;
  const Scalar var = static_cast<Scalar>(lik.variance);
  const Scalar norm_const =
      Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * var);
  return r.squaredNorm() / (Scalar(2) * var) + norm_const * Scalar(r.size());
}

template <typename Scalar>
struct LossAndGrad {
  Scalar loss;
  ParamVectorT<Scalar> grad;
};

template <typename Scalar>
LossAndGrad<Scalar> nll_and_grad(const ParamVectorT<Scalar>& p, const TransitionWindowT<Scalar>& w,
                                 const LikelihoodConfig& lik) {
  lik.validate();
  w.validate(p.arch());
  const auto& arch = p.arch();
  const auto d = arch.layer_dims();
  const int L = arch.num_layers();
  const Scalar var = static_cast<Scalar>(lik.variance);

  auto act = detail::forward_cached(p, w.inputs);
  MatrixX<Scalar> delta = act.pre.back() - w.targets;  // residual
  const Scalar norm_const =
      Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * var);
  const Scalar loss = delta.squaredNorm() / (Scalar(2) * var) + norm_const * Scalar(delta.size());
  delta /= var;

  VectorX<Scalar> g(p.size());
  for (int l = L - 1; l >= 0; --l) {
    const Eigen::Index off = arch.weight_offset(l);
    Eigen::Map<MatrixX<Scalar>> gW(g.data() + off, d[l + 1], d[l]);
    Eigen::Map<VectorX<Scalar>> gb(g.data() + off + Eigen::Index(d[l + 1]) * d[l], d[l + 1]);
    gW.noalias() = delta * act.post[l].transpose();
    gb = delta.rowwise().sum();
    if (l > 0) {
      MatrixX<Scalar> back = p.weight(l).transpose() * delta;
      delta = back.cwiseProduct((act.pre[l - 1].array() > Scalar(0)).matrix().template cast<Scalar>());
    }
  }
  return {loss, p.with_values(std::move(g))};
}

template <typename Scalar>
ParamVectorT<Scalar> grad_nll(const ParamVectorT<Scalar>& p, const TransitionWindowT<Scalar>& w,
                              const LikelihoodConfig& lik) {
  return nll_and_grad(p, w, lik).grad;
}

/// params - lr * weight * grad. The input is left untouched.
template <typename Scalar>
ParamVectorT<Scalar> sgd_step(const ParamVectorT<Scalar>& params, const ParamVectorT<Scalar>& grad,
                              double lr, double weight) {
  if (params.arch() != grad.arch() || params.size() != grad.size())
    throw ArgumentError("sgd_step: parameter/gradient shapes differ");
  if (!grad.values().allFinite()) throw NumericalError("sgd_step: non-finite gradient");
  if (!(lr >= 0.0)) throw ArgumentError("sgd_step: learning rate must be non-negative");
  if (!(weight >= 0.0 && weight <= 1.0)) throw ArgumentError("sgd_step: weight must lie in [0,1]");
  const Scalar scale = static_cast<Scalar>(lr * weight);
  return params.with_values(params.values() - scale * grad.values());
}

}  // namespace mole
