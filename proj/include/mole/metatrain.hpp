#pragma once

// MAML meta-training of the prior inside a model-based RL data-collection
// loop, plus the plain supervised trainer used for the non-meta baselines.
//
// Meta-objective over a batch:  sum_T nll(theta - eta * grad nll(theta, D_tr), D_val)
// First-order gradient:         sum_T grad nll(phi_T, D_val)
// Second-order gradient:        sum_T (I - eta * H_tr(theta)) grad nll(phi_T, D_val),
//                               H_tr v by central differences of grad nll(., D_tr).

#include <concepts>
#include <vector>

#include "mole/checkpoint.hpp"
#include "mole/controller.hpp"
#include "mole/dataset.hpp"
#include "mole/environments.hpp"

namespace mole {

struct MetaConfig {
  double inner_lr = 0.01;   // eta
  double outer_lr = 0.001;
  int meta_iterations = 12;
  int epochs = 50;
  int tasks_per_iter = 16;
  int timesteps_per_iter = 2500;
  int k = 16;               // train (and validation) window length
  int batch_tasks = 16;     // windows per meta-batch
  bool second_order = false;
  double hvp_step = 1e-5;

  void validate() const;
};

struct MetaTask {
  TransitionWindow train;
  TransitionWindow val;  // the k transitions that follow `train`
};

struct MetaBatch {
  std::vector<MetaTask> tasks;
};

/// Anything with value/gradient over flat parameters and a window.
template <class L>
concept WindowLoss = requires(const L& l, const Eigen::VectorXd& th, const TransitionWindow& w) {
  { l.value(th, w) } -> std::convertible_to<double>;
  { l.gradient(th, w) } -> std::convertible_to<Eigen::VectorXd>;
};

/// Gaussian NLL of the MLP as a WindowLoss.
struct MlpLoss {
  std::shared_ptr<const NetArchitecture> arch;
  LikelihoodConfig lik;

  double value(const Eigen::VectorXd& th, const TransitionWindow& w) const {
    return nll(ParamVector(arch, th), w, lik);
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& th, const TransitionWindow& w) const {
    return grad_nll(ParamVector(arch, th), w, lik).values();
  }
};

template <WindowLoss L>
double meta_objective(const L& loss, const Eigen::VectorXd& theta, const MetaBatch& batch, double eta) {
  double total = 0.0;
  for (const auto& t : batch.tasks) total += loss.value(theta - eta * loss.gradient(theta, t.train), t.val);
  return total;
}

template <WindowLoss L>
Eigen::VectorXd meta_gradient(const L& loss, const Eigen::VectorXd& theta, const MetaBatch& batch, double eta,
                              bool second_order, double hvp_step) {
  if (batch.tasks.empty()) throw ArgumentError("meta_gradient: empty batch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
  for (const auto& t : batch.tasks) {
    const Eigen::VectorXd phi = theta - eta * loss.gradient(theta, t.train);
    Eigen::VectorXd v = loss.gradient(phi, t.val);
    if (second_order && eta != 0.0) {
      const double norm = v.norm();
      if (norm > 0.0) {
        const Eigen::VectorXd dir = v / norm;
        const Eigen::VectorXd hv = (loss.gradient(theta + hvp_step * dir, t.train) -
                                    loss.gradient(theta - hvp_step * dir, t.train)) *
                                   (norm / (2.0 * hvp_step));
        v -= eta * hv;
      }
    }
    g += v;
  }
  if (!g.allFinite()) throw NumericalError("meta_gradient: non-finite gradient");
  return g;
}

/// phi = theta - eta * grad nll(theta, train).
ParamVector inner_adapt(const ParamVector& theta, const TransitionWindow& train, double eta,
                        const LikelihoodConfig& lik);

double meta_objective(const ParamVector& theta, const MetaBatch& batch, const MetaConfig& cfg,
                      const LikelihoodConfig& lik);
ParamVector meta_gradient(const ParamVector& theta, const MetaBatch& batch, const MetaConfig& cfg,
                          const LikelihoodConfig& lik);

/// Adjacent (train, val) window pairs drawn uniformly over valid positions of
/// trajectories with at least 2k transitions.
MetaBatch sample_meta_batch(const Dataset& data, const Normalizer& norm, int batch_tasks, int k, Rng& rng);

/// Number of meta-batches that makes one pass over the dataset.
long batches_per_epoch(const Dataset& data, const MetaConfig& cfg);

/// `epochs` passes of plain gradient descent on the meta-objective.
ParamVector meta_fit(ParamVector theta, const Dataset& data, const Normalizer& norm, const MetaConfig& cfg,
                     const LikelihoodConfig& lik, Rng& rng, int epochs);

/// Same batches and optimizer as meta_fit, minimizing sum_T nll(theta, D_val)
/// directly (joint training without adaptation).
ParamVector train_supervised(ParamVector theta, const Dataset& data, const Normalizer& norm,
                             const MetaConfig& cfg, const LikelihoodConfig& lik, Rng& rng, int epochs);

struct MetaTrainSetup {
  NetArchitecture arch;  // input/output dims are filled from the environment
  LikelihoodConfig lik;
  MetaConfig meta;
  ControllerConfig controller;  // planner used while collecting data
};

struct MetaTrainResult {
  Checkpoint prior;
  Dataset dataset;
};

/// Alternate on-policy collection (MPC on the k-shot adapted prior) with
/// meta-optimization on everything collected so far.
MetaTrainResult meta_train(const Environment& env, const MetaTrainSetup& setup, std::uint64_t seed);

/// Plain supervised model on the same data, replaying the collection
/// schedule: after each iteration's data arrives, `epochs` passes over the
/// data collected so far.
Checkpoint train_baseline(const Dataset& data, const MetaTrainSetup& setup, std::uint64_t seed);

/// Meta-fit a fresh prior on a fixed dataset with the same replayed schedule.
Checkpoint meta_fit_offline(const Dataset& data, const MetaTrainSetup& setup, std::uint64_t seed);

}  // namespace mole
