#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attrmetric/model.hpp"

namespace attrmetric {

/// Features, per-sample attributes, optional class labels and named
/// class-level splits ("train", "test", "val", ...).
struct Dataset {
  Matrix features;    ///< N x d
  Matrix attributes;  ///< N x p, entries in [0, 1]
  std::vector<int> labels;  ///< empty, or one class id per row
  std::map<std::string, std::vector<int>> splits;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index feature_dim() const { return features.cols(); }
  Eigen::Index attribute_dim() const { return attributes.cols(); }
  bool has_labels() const { return !labels.empty(); }

  /// Checks every container invariant; throws DataError.
  void validate() const;

  /// Class ids of a split; throws DataError if the split is missing.
  const std::vector<int>& split(const std::string& name) const;

  /// Row indices (ascending) whose label is in `classes`.
  std::vector<Eigen::Index> rows_of_classes(std::span<const int> classes) const;

  /// Dataset restricted to `rows`, keeping splits untouched.
  Dataset select_rows(std::span<const Eigen::Index> rows) const;

  bool operator==(const Dataset&) const;
};

/// Parameters of the synthetic benchmark generator.
struct SynthSpec {
  int n_classes = 15;
  int samples_per_class = 50;
  int p = 20;
  int d = 64;
  double attribute_density = 0.35;
  double noise_sigma = 0.05;
  std::uint64_t seed = 7;
  /// Number of classes (the highest ids) placed in the "test" split.
  int test_classes = 3;
  /// Per-image attribute noise along a few shared random directions, clipped
  /// to [0, 1]. Zero means every image carries its class signature exactly.
  double attribute_noise_sigma = 0.0;
  int attribute_noise_rank = 2;
  /// Use the identity as mixing map (requires d == p).
  bool identity_mixing = false;

  void validate() const;

  /// 15 classes x 50 images, p = 20, d = 64, density 0.35, sigma 0.05, seed 7.
  static SynthSpec synth_a();
  /// synth_a() with correlated per-image attribute noise and seed 11.
  static SynthSpec synth_b();
};

struct SynthOutput {
  Dataset dataset;
  Matrix mixing;           ///< p x d map from signatures to features
  Matrix class_signatures; ///< n_classes x p binary signatures
};

/// Draws class signatures, a full-rank mixing map M and features
/// x = signature * M + N(0, noise_sigma^2). Deterministic in spec.seed.
SynthOutput synth_generate_full(const SynthSpec& spec);
Dataset synth_generate(const SynthSpec& spec);

/// Reads features.csv, attributes.csv, optional labels.csv and splits.txt.
Dataset load_dataset(const std::filesystem::path& dir);
/// Writes the same layout with 17 significant digits. A non-empty
/// `header_comment` becomes a leading '#' line in every file.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  const std::string& header_comment = {});

inline constexpr const char* kModelFormatName = "attrmetric-model";
inline constexpr int kModelFormatVersion = 1;

/// Model text document; `header_comment` (if non-empty) is written as a
/// '#' line after the format line.
std::string serialize_model(const Model& model,
                            const std::string& header_comment = {});
Model parse_model(const std::string& text);

void save_model(const Model& model, const std::filesystem::path& path,
                const std::string& header_comment = {});
Model load_model(const std::filesystem::path& path);

/// Decimal with 17 significant digits (round-trip exact for doubles).
std::string format_double(double value);
/// Strict decimal parse; throws DataError(kParse) naming `context`.
double parse_double(std::string_view text, const std::string& context);

}  // namespace attrmetric
