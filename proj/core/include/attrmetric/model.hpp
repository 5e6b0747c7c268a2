#pragma once

#include <Eigen/Dense>

namespace attrmetric {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-dimension affine normalization of image features, x -> (x - mean) / scale.
/// An empty standardizer is the identity.
struct Standardizer {
  Vector mean;
  Vector scale;

  bool empty() const { return mean.size() == 0; }

  /// Fits zero-mean, unit-variance statistics on the rows of `features`.
  /// Dimensions with zero variance keep scale 1.
  static Standardizer fit(const Matrix& features);

  Vector apply(const Vector& x) const;
  Matrix apply_rows(const Matrix& rows) const;

  bool operator==(const Standardizer&) const = default;
};

/// Learned consistency model: image embedding (w_x, b_x), Mahalanobis
/// mapping w_a and the similar/dissimilar threshold tau.
///
/// Shapes: w_x is d x p, b_x has length p, w_a is p x m.
struct Model {
  Matrix w_x;
  Vector b_x;
  Matrix w_a;
  double tau = 1.0;
  Standardizer standardizer;

  Eigen::Index feature_dim() const { return w_x.rows(); }
  Eigen::Index attribute_dim() const { return w_x.cols(); }
  Eigen::Index metric_dim() const { return w_a.cols(); }

  /// Throws DimensionError when shapes disagree, Error on non-finite entries.
  void validate() const;

  bool operator==(const Model& other) const;
};

/// Model with all-zero weights of the given shape and tau = 1.
Model zero_model(Eigen::Index d, Eigen::Index p, Eigen::Index m);

/// Throws DataError unless every entry is finite and in [0, 1].
void check_attribute_vector(const Vector& y);

/// max(0, x^T w_x + b_x), after the model's feature standardization.
Vector embed_image(const Vector& x, const Model& model);

/// Row-wise embed_image over an N x d matrix; returns N x p.
Matrix embed_images(const Matrix& features, const Model& model);

/// d_A(a, b) = || (a - b)^T w_a ||_2.
double metric_distance(const Vector& a, const Vector& b, const Matrix& w_a);

/// Consistency score S(x, y); smaller means more consistent.
double score(const Vector& x, const Vector& y, const Model& model);

/// S(x, y)^2 evaluated as a quadratic form, without the square root.
double score_squared(const Vector& x, const Vector& y, const Model& model);

}  // namespace attrmetric
