#include <algorithm>
#include <cmath>
#include <set>

#include "attrmetric/data.hpp"
#include "attrmetric/errors.hpp"
#include "attrmetric/rng.hpp"

namespace attrmetric {

namespace {

constexpr int kMaxSignatureDraws = 1000;

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev,
                       Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_classes < 2) throw ConfigError("synth: n_classes must be >= 2");
  if (samples_per_class < 1) throw ConfigError("synth: samples_per_class must be >= 1");
  if (p < 1 || d < 1) throw ConfigError("synth: p and d must be >= 1");
  if (!(attribute_density > 0.0 && attribute_density < 1.0)) {
    throw ConfigError("synth: attribute_density must be in (0, 1)");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be >= 0");
  if (test_classes < 0 || test_classes >= n_classes) {
    throw ConfigError("synth: test_classes must be in [0, n_classes)");
  }
  if (!(attribute_noise_sigma >= 0.0)) {
    throw ConfigError("synth: attribute_noise_sigma must be >= 0");
  }
  if (attribute_noise_rank < 1) throw ConfigError("synth: attribute_noise_rank must be >= 1");
  if (identity_mixing && d != p) throw ConfigError("synth: identity mixing requires d == p");
}

SynthSpec SynthSpec::synth_a() { return SynthSpec{}; }

SynthSpec SynthSpec::synth_b() {
  SynthSpec spec;
  spec.seed = 11;
  spec.attribute_noise_sigma = 0.3;
  spec.attribute_noise_rank = 2;
  return spec;
}

SynthOutput synth_generate_full(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Pairwise-distinct binary class signatures.
  std::bernoulli_distribution bit(spec.attribute_density);
  Matrix signatures(spec.n_classes, spec.p);
  std::set<std::vector<int>> seen;
  int draws = 0;
  for (int k = 0; k < spec.n_classes; ++k) {
    while (true) {
      if (++draws > kMaxSignatureDraws) {
        throw DataError(DataErrorKind::kInconsistent,
                        "synth: could not draw " + std::to_string(spec.n_classes) +
                            " distinct signatures in " +
                            std::to_string(kMaxSignatureDraws) + " draws");
      }
      std::vector<int> bits(static_cast<std::size_t>(spec.p));
      for (auto& b : bits) b = bit(rng) ? 1 : 0;
      if (seen.insert(bits).second) {
        for (int j = 0; j < spec.p; ++j) {
          signatures(k, j) = bits[static_cast<std::size_t>(j)];
        }
        break;
      }
    }
  }

  Matrix mixing;
  if (spec.identity_mixing) {
    mixing = Matrix::Identity(spec.p, spec.d);
  } else {
    const auto full_rank = std::min(spec.p, spec.d);
    do {
      mixing = gaussian_matrix(spec.p, spec.d, 1.0, rng);
    } while (Eigen::FullPivLU<Matrix>(mixing).rank() < full_rank);
  }

  Matrix noise_directions;
  if (spec.attribute_noise_sigma > 0.0) {
    noise_directions = gaussian_matrix(
        spec.p, spec.attribute_noise_rank,
        1.0 / std::sqrt(static_cast<double>(spec.attribute_noise_rank)), rng);
  }

  const Eigen::Index n =
      static_cast<Eigen::Index>(spec.n_classes) * spec.samples_per_class;
  SynthOutput out;
  out.mixing = mixing;
  out.class_signatures = signatures;
  out.dataset.features.resize(n, spec.d);
  out.dataset.attributes.resize(n, spec.p);
  out.dataset.labels.reserve(static_cast<std::size_t>(n));

  std::normal_distribution<double> feature_noise(0.0, 1.0);
  std::normal_distribution<double> latent(0.0, 1.0);
  Eigen::Index row = 0;
  for (int k = 0; k < spec.n_classes; ++k) {
    const Vector signature = signatures.row(k).transpose();
    const Vector clean = mixing.transpose() * signature;
    for (int s = 0; s < spec.samples_per_class; ++s, ++row) {
      Vector x = clean;
      if (spec.noise_sigma > 0.0) {
        for (Eigen::Index j = 0; j < x.size(); ++j) {
          x(j) += spec.noise_sigma * feature_noise(rng);
        }
      }
      Vector y = signature;
      if (spec.attribute_noise_sigma > 0.0) {
        Vector g(spec.attribute_noise_rank);
        for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = latent(rng);
        y = (y + spec.attribute_noise_sigma * (noise_directions * g))
                .cwiseMax(0.0)
                .cwiseMin(1.0);
      }
      out.dataset.features.row(row) = x.transpose();
      out.dataset.attributes.row(row) = y.transpose();
      out.dataset.labels.push_back(k);
    }
  }

  const int n_train = spec.n_classes - spec.test_classes;
  auto& train = out.dataset.splits["train"];
  for (int k = 0; k < n_train; ++k) train.push_back(k);
  if (spec.test_classes > 0) {
    auto& test = out.dataset.splits["test"];
    for (int k = n_train; k < spec.n_classes; ++k) test.push_back(k);
  }
  out.dataset.validate();
  return out;
}

Dataset synth_generate(const SynthSpec& spec) {
  return synth_generate_full(spec).dataset;
}

}  // namespace attrmetric
