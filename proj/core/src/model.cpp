#include "attrmetric/model.hpp"

#include <cmath>
#include <string>

#include "attrmetric/errors.hpp"

namespace attrmetric {

namespace {

void check_feature_length(const Vector& x, const Model& model) {
  if (x.size() != model.feature_dim()) {
    throw DimensionError("feature vector length", model.feature_dim(),
                         x.size());
  }
}

void check_attribute_length(const Vector& y, const Model& model) {
  if (y.size() != model.attribute_dim()) {
    throw DimensionError("attribute vector length", model.attribute_dim(),
                         y.size());
  }
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& features) {
  Standardizer s;
  const auto n = static_cast<double>(features.rows());
  s.mean = features.colwise().mean().transpose();
  s.scale = Vector::Ones(features.cols());
  if (features.rows() < 2) return s;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var =
        (features.col(j).array() - s.mean(j)).square().sum() / n;
    if (var > 0.0) s.scale(j) = std::sqrt(var);
  }
  return s;
}

Vector Standardizer::apply(const Vector& x) const {
  if (empty()) return x;
  if (x.size() != mean.size()) {
    throw DimensionError("standardizer input length", mean.size(), x.size());
  }
  return (x - mean).cwiseQuotient(scale);
}

Matrix Standardizer::apply_rows(const Matrix& rows) const {
  if (empty()) return rows;
  if (rows.cols() != mean.size()) {
    throw DimensionError("standardizer input width", mean.size(), rows.cols());
  }
  return (rows.rowwise() - mean.transpose()).array().rowwise() /
         scale.transpose().array();
}

void Model::validate() const {
  if (b_x.size() != w_x.cols()) {
    throw DimensionError("b_x length", w_x.cols(), b_x.size());
  }
  if (w_a.rows() != w_x.cols()) {
    throw DimensionError("w_a rows", w_x.cols(), w_a.rows());
  }
  if (w_a.cols() < 1) throw DimensionError("w_a cols (m >= 1)", 1, 0);
  if (!standardizer.empty()) {
    if (standardizer.mean.size() != w_x.rows()) {
      throw DimensionError("standardizer mean length", w_x.rows(),
                           standardizer.mean.size());
    }
    if (standardizer.scale.size() != w_x.rows()) {
      throw DimensionError("standardizer scale length", w_x.rows(),
                           standardizer.scale.size());
    }
    if (!standardizer.mean.allFinite() || !standardizer.scale.allFinite() ||
        (standardizer.scale.array() <= 0.0).any()) {
      throw Error("standardizer has non-finite or non-positive entries");
    }
  }
  if (!w_x.allFinite() || !b_x.allFinite() || !w_a.allFinite() ||
      !std::isfinite(tau)) {
    throw Error("model has non-finite parameters");
  }
}

bool Model::operator==(const Model& other) const {
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(w_x, other.w_x) && same(b_x, other.b_x) &&
         same(w_a, other.w_a) && tau == other.tau &&
         same(standardizer.mean, other.standardizer.mean) &&
         same(standardizer.scale, other.standardizer.scale);
}

Model zero_model(Eigen::Index d, Eigen::Index p, Eigen::Index m) {
  Model model;
  model.w_x = Matrix::Zero(d, p);
  model.b_x = Vector::Zero(p);
  model.w_a = Matrix::Zero(p, m);
  model.tau = 1.0;
  return model;
}

void check_attribute_vector(const Vector& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y(i)) || y(i) < 0.0 || y(i) > 1.0) {
      throw DataError(DataErrorKind::kOutOfRange,
                      "attribute entry " + std::to_string(i) +
                          " outside [0,1]: " + std::to_string(y(i)));
    }
  }
}

Vector embed_image(const Vector& x, const Model& model) {
  check_feature_length(x, model);
  const Vector xs = model.standardizer.apply(x);
  return (model.w_x.transpose() * xs + model.b_x).cwiseMax(0.0);
}

Matrix embed_images(const Matrix& features, const Model& model) {
  if (features.cols() != model.feature_dim()) {
    throw DimensionError("feature matrix width", model.feature_dim(),
                         features.cols());
  }
  const Matrix xs = model.standardizer.apply_rows(features);
  Matrix pre = xs * model.w_x;
  pre.rowwise() += model.b_x.transpose();
  return pre.cwiseMax(0.0);
}

double metric_distance(const Vector& a, const Vector& b, const Matrix& w_a) {
  if (a.size() != w_a.rows()) {
    throw DimensionError("metric operand length", w_a.rows(), a.size());
  }
  if (b.size() != w_a.rows()) {
    throw DimensionError("metric operand length", w_a.rows(), b.size());
  }
  return (w_a.transpose() * (a - b)).norm();
}

double score(const Vector& x, const Vector& y, const Model& model) {
  check_attribute_length(y, model);
  return metric_distance(embed_image(x, model), y, model.w_a);
}

double score_squared(const Vector& x, const Vector& y, const Model& model) {
  check_attribute_length(y, model);
  const Vector r = embed_image(x, model) - y;
  const Vector v = model.w_a.transpose() * r;
  return v.dot(v);
}

}  // namespace attrmetric
