#include "attrmetric/objective.hpp"

#include <algorithm>
#include <string>

#include "attrmetric/errors.hpp"

namespace attrmetric {

namespace {

// Intermediate quantities of one batched forward pass.
struct Forward {
  Matrix xs;   // standardized features, N x d
  Matrix pre;  // pre-activations, N x p
  Matrix r;    // embed(x) - y, N x p
  Matrix v;    // r w_a, N x m
  Vector s2;   // squared scores
};

void check_batch(const PairBatch& batch, const Model& model) {
  if (batch.size() == 0) {
    throw DataError(DataErrorKind::kEmpty, "empty triplet batch");
  }
  if (batch.x.cols() != model.feature_dim()) {
    throw DimensionError("triplet feature length", model.feature_dim(),
                         batch.x.cols());
  }
  if (batch.y.cols() != model.attribute_dim()) {
    throw DimensionError("triplet attribute length", model.attribute_dim(),
                         batch.y.cols());
  }
}

Forward forward(const PairBatch& batch, const Model& model) {
  check_batch(batch, model);
  Forward f;
  f.xs = model.standardizer.apply_rows(batch.x);
  f.pre = f.xs * model.w_x;
  f.pre.rowwise() += model.b_x.transpose();
  f.r = f.pre.cwiseMax(0.0) - batch.y;
  f.v = f.r * model.w_a;
  f.s2 = f.v.rowwise().squaredNorm();
  return f;
}

double hinge_argument(double z, double tau, double s2) {
  return 1.0 - z * (tau - s2);
}

void check_z(int z) {
  if (z != 1 && z != -1) {
    throw DataError(DataErrorKind::kOutOfRange,
                    "triplet indicator must be -1 or +1, got " +
                        std::to_string(z));
  }
}

}  // namespace

void HyperParams::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
  if (m < 1) throw ConfigError("m must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must be in [0, 1)");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if (refit_epochs < 0) throw ConfigError("refit_epochs must be >= 0");
  if (early_stopping_patience < 0) {
    throw ConfigError("early_stopping_patience must be >= 0");
  }
}

PairBatch PairBatch::pack(std::span<const Triplet> triplets) {
  PairBatch batch;
  if (triplets.empty()) return batch;
  const auto d = triplets.front().x.size();
  const auto p = triplets.front().y.size();
  const auto n = static_cast<Eigen::Index>(triplets.size());
  batch.x.resize(n, d);
  batch.y.resize(n, p);
  batch.z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Triplet& t = triplets[static_cast<std::size_t>(i)];
    if (t.x.size() != d) throw DimensionError("triplet feature length", d, t.x.size());
    if (t.y.size() != p) throw DimensionError("triplet attribute length", p, t.y.size());
    check_z(t.z);
    batch.x.row(i) = t.x.transpose();
    batch.y.row(i) = t.y.transpose();
    batch.z(i) = t.z;
  }
  return batch;
}

PairBatch PairBatch::gather(std::span<const Eigen::Index> indices) const {
  PairBatch out;
  const auto n = static_cast<Eigen::Index>(indices.size());
  out.x.resize(n, x.cols());
  out.y.resize(n, y.cols());
  out.z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = indices[static_cast<std::size_t>(i)];
    out.x.row(i) = x.row(src);
    out.y.row(i) = y.row(src);
    out.z(i) = z(src);
  }
  return out;
}

Triplet PairBatch::at(Eigen::Index i) const {
  return Triplet{x.row(i).transpose(), y.row(i).transpose(),
                 static_cast<int>(z(i))};
}

double hinge_loss(const Triplet& t, const Model& model) {
  check_z(t.z);
  const double s2 = score_squared(t.x, t.y, model);
  return std::max(0.0, hinge_argument(t.z, model.tau, s2));
}

double attribute_loss(const Triplet& t, const Model& model) {
  check_z(t.z);
  const Vector a = embed_image(t.x, model);
  if (t.y.size() != a.size()) {
    throw DimensionError("attribute vector length", a.size(), t.y.size());
  }
  if (t.z < 0) return 0.0;
  return (t.y - a).squaredNorm();
}

double regularizer(const Model& model) {
  return model.w_x.squaredNorm() + model.b_x.squaredNorm() +
         model.w_a.squaredNorm();
}

double total_loss(const PairBatch& batch, const Model& model,
                  const HyperParams& hp) {
  const Forward f = forward(batch, model);
  double hinge = 0.0;
  double attr = 0.0;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const double z = batch.z(i);
    hinge += std::max(0.0, hinge_argument(z, model.tau, f.s2(i)));
    if (z > 0.0) attr += f.r.row(i).squaredNorm();
  }
  return hinge + hp.lambda * attr + hp.mu * regularizer(model);
}

double total_loss(std::span<const Triplet> batch, const Model& model,
                  const HyperParams& hp) {
  return total_loss(PairBatch::pack(batch), model, hp);
}

Gradients gradients(const PairBatch& batch, const Model& model,
                    const HyperParams& hp) {
  const Forward f = forward(batch, model);
  const Eigen::Index n = batch.size();

  // Coefficient of S^2 in the loss for each sample: z when the hinge is
  // active, else 0. The attribute term contributes only for z = +1.
  Vector hinge_coef = Vector::Zero(n);
  Vector attr_coef = Vector::Zero(n);
  double d_tau = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = batch.z(i);
    if (hinge_argument(z, model.tau, f.s2(i)) > 0.0) {
      hinge_coef(i) = z;
      d_tau -= z;
    }
    if (z > 0.0) attr_coef(i) = hp.lambda;
  }

  // dS^2/dr = 2 w_a w_a^T r ; dS^2/dw_a = 2 r r^T w_a.
  const Matrix weighted_v = hinge_coef.asDiagonal() * f.v;
  Matrix grad_embed = 2.0 * weighted_v * model.w_a.transpose() +
                      2.0 * (attr_coef.asDiagonal() * f.r);
  grad_embed = (f.pre.array() > 0.0).select(grad_embed, 0.0);

  Gradients g;
  g.d_w_x = f.xs.transpose() * grad_embed + 2.0 * hp.mu * model.w_x;
  g.d_b_x = grad_embed.colwise().sum().transpose() + 2.0 * hp.mu * model.b_x;
  g.d_w_a = 2.0 * f.r.transpose() * weighted_v + 2.0 * hp.mu * model.w_a;
  g.d_tau = d_tau;
  return g;
}

Gradients gradients(std::span<const Triplet> batch, const Model& model,
                    const HyperParams& hp) {
  return gradients(PairBatch::pack(batch), model, hp);
}

double pair_accuracy(const PairBatch& batch, const Model& model) {
  if (batch.size() == 0) {
    throw DataError(DataErrorKind::kEmpty, "empty triplet batch");
  }
  const Forward f = forward(batch, model);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const double predicted = (model.tau - f.s2(i)) > 0.0 ? 1.0 : -1.0;
    if (predicted == batch.z(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

}  // namespace attrmetric
