#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attrmetric/model.hpp"

namespace attrmetric {

/// One training unit: image features, attribute description and the
/// consistency indicator z (+1 consistent, -1 inconsistent).
struct Triplet {
  Vector x;
  Vector y;
  int z = 1;
};

/// Weights of the criterion plus optimizer settings.
struct HyperParams {
  double lambda = 0.5;  ///< attribute-prediction loss weight
  double mu = 0.01;     ///< quadratic regularizer weight
  int m = 8;            ///< metric embedding dimension
  double learning_rate = 1e-2;
  double momentum = 0.0;
  int batch_size = 100;
  int epochs = 200;
  int restarts = 5;
  std::uint64_t seed = 0;
  /// After restart selection, retrain from the winning initialization on the
  /// whole training set for `epochs`. When false, the winner's weights are
  /// instead continued for refit_epochs.
  bool refit_from_init = true;
  int refit_epochs = 50;
  bool standardize = true;
  /// Pin w_a to the identity and never update it (pure Euclidean score).
  bool freeze_metric = false;
  /// Stop a run after this many epochs without validation improvement;
  /// 0 disables early stopping.
  int early_stopping_patience = 0;
  /// Multiplier on the 1/sqrt(fan_in) standard deviation of the initial w_x.
  double init_scale_x = 1.0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Gradient of the criterion; shapes mirror Model.
struct Gradients {
  Matrix d_w_x;
  Vector d_b_x;
  Matrix d_w_a;
  double d_tau = 0.0;
};

/// Row-packed triplets: x is N x d, y is N x p, z has length N.
struct PairBatch {
  Matrix x;
  Matrix y;
  Vector z;

  Eigen::Index size() const { return z.size(); }

  /// Packs triplets; throws DimensionError on ragged input, DataError on
  /// z outside {-1, +1}.
  static PairBatch pack(std::span<const Triplet> triplets);

  /// Rows `indices` in the given order.
  PairBatch gather(std::span<const Eigen::Index> indices) const;

  Triplet at(Eigen::Index i) const;
};

/// max(0, 1 - z (tau - S^2)).
double hinge_loss(const Triplet& t, const Model& model);

/// max(0, z) ||y - embed(x)||^2; zero for inconsistent pairs.
double attribute_loss(const Triplet& t, const Model& model);

/// ||w_x||_F^2 + ||b_x||^2 + ||w_a||_F^2. tau is not penalized.
double regularizer(const Model& model);

/// sum hinge + lambda * sum attribute + mu * regularizer. The regularizer
/// enters once per call, independent of batch size.
double total_loss(const PairBatch& batch, const Model& model,
                  const HyperParams& hp);
double total_loss(std::span<const Triplet> batch, const Model& model,
                  const HyperParams& hp);

/// Analytic (sub)gradient of total_loss. Subgradient 0 is used at ReLU
/// kinks (pre-activation exactly 0) and at the hinge kink.
Gradients gradients(const PairBatch& batch, const Model& model,
                    const HyperParams& hp);
Gradients gradients(std::span<const Triplet> batch, const Model& model,
                    const HyperParams& hp);

/// Fraction of pairs where sign(tau - S^2) agrees with z (0 counts as -1).
double pair_accuracy(const PairBatch& batch, const Model& model);

}  // namespace attrmetric
