#include "attrmetric/errors.hpp"
#include "attrmetric/rng.hpp"
#include "attrmetric/training.hpp"

namespace attrmetric {

namespace {

constexpr int kNegativeDraws = 100;

}  // namespace

void PairConfig::validate() const {
  if (positives_per_image < 1) throw ConfigError("positives_per_image must be >= 1");
  if (negatives_per_image < 1) throw ConfigError("negatives_per_image must be >= 1");
  if (!(min_negative_distance >= 0.0)) {
    throw ConfigError("min_negative_distance must be >= 0");
  }
}

std::vector<Triplet> make_pairs(const Matrix& features, const Matrix& attributes,
                                const PairConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = features.rows();
  if (attributes.rows() != n) {
    throw DimensionError("attribute row count", n, attributes.rows());
  }
  if (n < 2) {
    throw DataError(DataErrorKind::kNoNegative,
                    "make_pairs needs at least 2 images, got " + std::to_string(n));
  }

  Rng rng(cfg.seed);
  std::uniform_int_distribution<Eigen::Index> other(0, n - 2);
  const auto valid = [&](Eigen::Index i, Eigen::Index j) {
    return (attributes.row(j) - attributes.row(i)).norm() > cfg.min_negative_distance;
  };

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(n) *
                   static_cast<std::size_t>(cfg.positives_per_image + cfg.negatives_per_image));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector x = features.row(i).transpose();
    const Vector y = attributes.row(i).transpose();
    for (int k = 0; k < cfg.positives_per_image; ++k) triplets.push_back({x, y, +1});

    for (int k = 0; k < cfg.negatives_per_image; ++k) {
      Eigen::Index chosen = -1;
      for (int attempt = 0; attempt < kNegativeDraws && chosen < 0; ++attempt) {
        Eigen::Index j = other(rng);
        if (j >= i) ++j;
        if (valid(i, j)) chosen = j;
      }
      if (chosen < 0) {
        // Rejection sampling failed; fall back to an exact draw among the
        // admissible images, if any.
        std::vector<Eigen::Index> candidates;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j != i && valid(i, j)) candidates.push_back(j);
        }
        if (candidates.empty()) {
          throw DataError(DataErrorKind::kNoNegative,
                          "no negative attribute vector farther than " +
                              std::to_string(cfg.min_negative_distance) +
                              " exists for image " + std::to_string(i));
        }
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        chosen = candidates[pick(rng)];
      }
      triplets.push_back({x, attributes.row(chosen).transpose(), -1});
    }
  }
  return triplets;
}

}  // namespace attrmetric
