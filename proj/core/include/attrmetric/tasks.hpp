#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "attrmetric/model.hpp"

namespace attrmetric {

/// Attribute signature of one class, the anchor of the zero-shot decision.
struct ClassDescriptor {
  int class_id = 0;
  Vector signature;
};

/// One retrieved gallery item.
struct RankedResult {
  Eigen::Index item_index = 0;
  double score = 0.0;

  bool operator==(const RankedResult&) const = default;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Mean attribute vector per distinct class, ordered by class id.
std::vector<ClassDescriptor> class_descriptors(const Matrix& attributes,
                                               std::span<const int> labels);

/// Descriptors restricted to `classes` (ascending id); throws DataError if
/// a requested class has no samples.
std::vector<ClassDescriptor> class_descriptors(const Matrix& attributes,
                                               std::span<const int> labels,
                                               std::span<const int> classes);

/// argmin_k S(x, signature_k); ties go to the smallest class id.
int zsl_classify(const Vector& x, std::span<const ClassDescriptor> descriptors,
                 const Model& model);

/// zsl_classify for every row of `features`.
std::vector<int> zsl_predict(const Matrix& features,
                             std::span<const ClassDescriptor> descriptors,
                             const Model& model);

/// Fraction of rows whose predicted class equals the label.
double zsl_accuracy(const Matrix& features, std::span<const int> labels,
                    std::span<const ClassDescriptor> descriptors,
                    const Model& model);

/// Mean over rows of (s_other - s_true) / (s_other + s_true), where s_true is
/// the score against the row's own class signature and s_other the smallest
/// score against any other signature. In [-1, 1]; positive when the row is
/// classified correctly. Zero for a single descriptor.
double zsl_margin(const Matrix& features, std::span<const int> labels,
                  std::span<const ClassDescriptor> descriptors, const Model& model);

struct ClassAccuracy {
  int class_id = 0;
  int count = 0;
  double accuracy = 0.0;
};

/// Per-class accuracy, ordered by class id.
std::vector<ClassAccuracy> zsl_per_class_accuracy(
    const Matrix& features, std::span<const int> labels,
    std::span<const ClassDescriptor> descriptors, const Model& model);

/// Gallery items ranked by S(x, query), ascending, ties by index. Exactly one
/// of `threshold` (keep S < threshold) and `top_k` must be set.
std::vector<RankedResult> retrieve(const Vector& query, const Matrix& gallery,
                                   const Model& model,
                                   std::optional<double> threshold,
                                   std::optional<std::size_t> top_k);

/// Non-interpolated average precision over the full ranking.
double average_precision(std::span<const int> relevance);

/// (recall, precision) after each rank.
std::vector<PrPoint> pr_curve(std::span<const int> relevance);

/// Relevance flags of the gallery ranked against one query class.
std::vector<int> ranked_relevance(const ClassDescriptor& query,
                                  const Matrix& gallery,
                                  std::span<const int> gallery_labels,
                                  const Model& model);

struct RetrievalReport {
  double mean_ap = 0.0;
  std::vector<std::pair<int, double>> ap_per_class;
  std::vector<std::pair<int, std::vector<PrPoint>>> pr_per_class;
};

/// Every descriptor queries the labeled gallery; relevance is label equality.
RetrievalReport evaluate_retrieval(std::span<const ClassDescriptor> queries,
                                   const Matrix& gallery,
                                   std::span<const int> gallery_labels,
                                   const Model& model);

double mean_average_precision(std::span<const ClassDescriptor> queries,
                              const Matrix& gallery,
                              std::span<const int> gallery_labels,
                              const Model& model);

}  // namespace attrmetric
