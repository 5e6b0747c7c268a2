#include "attrmetric/tasks.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "attrmetric/errors.hpp"

namespace attrmetric {

namespace {

void check_descriptors(std::span<const ClassDescriptor> descriptors,
                       const Model& model) {
  if (descriptors.empty()) {
    throw DataError(DataErrorKind::kEmpty, "empty class descriptor set");
  }
  for (const auto& desc : descriptors) {
    if (desc.signature.size() != model.attribute_dim()) {
      throw DimensionError("class signature length", model.attribute_dim(),
                           desc.signature.size());
    }
  }
}

int argmin_class(const Vector& embedded,
                 std::span<const ClassDescriptor> descriptors,
                 const Matrix& w_a) {
  int best_id = 0;
  double best = 0.0;
  bool first = true;
  for (const auto& desc : descriptors) {
    const double s2 = (w_a.transpose() * (embedded - desc.signature)).squaredNorm();
    if (first || s2 < best || (s2 == best && desc.class_id < best_id)) {
      best = s2;
      best_id = desc.class_id;
      first = false;
    }
  }
  return best_id;
}

void check_relevance(std::span<const int> relevance) {
  const bool any = std::any_of(relevance.begin(), relevance.end(),
                               [](int r) { return r != 0; });
  if (!any) {
    throw DataError(DataErrorKind::kEmpty, "ranking has no relevant item");
  }
}

std::vector<RankedResult> rank_all(const Vector& query, const Matrix& gallery,
                                   const Model& model) {
  if (gallery.rows() == 0) {
    throw DataError(DataErrorKind::kEmpty, "empty retrieval gallery");
  }
  if (query.size() != model.attribute_dim()) {
    throw DimensionError("query length", model.attribute_dim(), query.size());
  }
  const Matrix embedded = embed_images(gallery, model);
  const Vector scores =
      ((embedded.rowwise() - query.transpose()) * model.w_a).rowwise().norm();
  std::vector<RankedResult> ranked(static_cast<std::size_t>(gallery.rows()));
  for (Eigen::Index i = 0; i < gallery.rows(); ++i) {
    ranked[static_cast<std::size_t>(i)] = {i, scores(i)};
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedResult& a, const RankedResult& b) {
                     return a.score < b.score;
                   });
  return ranked;
}

}  // namespace

std::vector<ClassDescriptor> class_descriptors(const Matrix& attributes,
                                               std::span<const int> labels) {
  const std::set<int> classes(labels.begin(), labels.end());
  const std::vector<int> ids(classes.begin(), classes.end());
  return class_descriptors(attributes, labels, ids);
}

std::vector<ClassDescriptor> class_descriptors(const Matrix& attributes,
                                               std::span<const int> labels,
                                               std::span<const int> classes) {
  if (static_cast<Eigen::Index>(labels.size()) != attributes.rows()) {
    throw DimensionError("label count", attributes.rows(), labels.size());
  }
  std::map<int, std::pair<Vector, int>> sums;
  for (int id : classes) sums.emplace(id, std::pair{Vector::Zero(attributes.cols()), 0});
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto it = sums.find(labels[r]);
    if (it == sums.end()) continue;
    it->second.first += attributes.row(static_cast<Eigen::Index>(r)).transpose();
    ++it->second.second;
  }
  std::vector<ClassDescriptor> out;
  for (auto& [id, acc] : sums) {
    if (acc.second == 0) {
      throw DataError(DataErrorKind::kEmpty,
                      "class " + std::to_string(id) + " has no samples");
    }
    out.push_back({id, acc.first / static_cast<double>(acc.second)});
  }
  return out;
}

int zsl_classify(const Vector& x, std::span<const ClassDescriptor> descriptors,
                 const Model& model) {
  check_descriptors(descriptors, model);
  return argmin_class(embed_image(x, model), descriptors, model.w_a);
}

std::vector<int> zsl_predict(const Matrix& features,
                             std::span<const ClassDescriptor> descriptors,
                             const Model& model) {
  check_descriptors(descriptors, model);
  const Matrix embedded = embed_images(features, model);
  std::vector<int> predicted(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    predicted[static_cast<std::size_t>(i)] =
        argmin_class(embedded.row(i).transpose(), descriptors, model.w_a);
  }
  return predicted;
}

double zsl_accuracy(const Matrix& features, std::span<const int> labels,
                    std::span<const ClassDescriptor> descriptors,
                    const Model& model) {
  const auto per_class = zsl_per_class_accuracy(features, labels, descriptors, model);
  double correct = 0.0;
  int total = 0;
  for (const auto& c : per_class) {
    correct += c.accuracy * c.count;
    total += c.count;
  }
  return correct / total;
}

double zsl_margin(const Matrix& features, std::span<const int> labels,
                  std::span<const ClassDescriptor> descriptors, const Model& model) {
  check_descriptors(descriptors, model);
  if (labels.empty()) throw DataError(DataErrorKind::kEmpty, "empty labeled set");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw DimensionError("label count", features.rows(), labels.size());
  }
  if (descriptors.size() < 2) return 0.0;
  const Matrix embedded = embed_images(features, model);
  double total = 0.0;
  for (Eigen::Index i = 0; i < embedded.rows(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    double own = -1.0;
    double other = std::numeric_limits<double>::infinity();
    for (const auto& desc : descriptors) {
      const double s =
          (model.w_a.transpose() * (embedded.row(i).transpose() - desc.signature)).norm();
      if (desc.class_id == label) {
        own = s;
      } else {
        other = std::min(other, s);
      }
    }
    if (own < 0.0) {
      throw DataError(DataErrorKind::kInconsistent,
                      "label " + std::to_string(label) + " has no class descriptor");
    }
    const double denom = own + other;
    total += denom > 0.0 ? (other - own) / denom : 0.0;
  }
  return total / static_cast<double>(embedded.rows());
}

std::vector<ClassAccuracy> zsl_per_class_accuracy(
    const Matrix& features, std::span<const int> labels,
    std::span<const ClassDescriptor> descriptors, const Model& model) {
  if (labels.empty()) {
    throw DataError(DataErrorKind::kEmpty, "empty labeled test set");
  }
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw DimensionError("label count", features.rows(), labels.size());
  }
  std::set<int> known;
  for (const auto& d : descriptors) known.insert(d.class_id);
  for (int label : labels) {
    if (!known.contains(label)) {
      throw DataError(DataErrorKind::kInconsistent,
                      "test label " + std::to_string(label) +
                          " has no class descriptor");
    }
  }
  const auto predicted = zsl_predict(features, descriptors, model);
  std::map<int, std::pair<int, int>> tally;  // id -> (correct, count)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& t = tally[labels[i]];
    t.first += predicted[i] == labels[i] ? 1 : 0;
    ++t.second;
  }
  std::vector<ClassAccuracy> out;
  for (const auto& [id, t] : tally) {
    out.push_back({id, t.second, static_cast<double>(t.first) / t.second});
  }
  return out;
}

std::vector<RankedResult> retrieve(const Vector& query, const Matrix& gallery,
                                   const Model& model,
                                   std::optional<double> threshold,
                                   std::optional<std::size_t> top_k) {
  if (threshold.has_value() == top_k.has_value()) {
    throw ConfigError("retrieve: supply exactly one of threshold or top_k");
  }
  if (threshold && !(*threshold >= 0.0)) {
    throw ConfigError("retrieve: threshold must be >= 0");
  }
  if (top_k && *top_k == 0) throw ConfigError("retrieve: top_k must be >= 1");
  auto ranked = rank_all(query, gallery, model);
  if (threshold) {
    const auto end = std::find_if(ranked.begin(), ranked.end(),
                                  [&](const RankedResult& r) {
                                    return !(r.score < *threshold);
                                  });
    ranked.erase(end, ranked.end());
  } else if (*top_k < ranked.size()) {
    ranked.resize(*top_k);
  }
  return ranked;
}

double average_precision(std::span<const int> relevance) {
  check_relevance(relevance);
  double sum = 0.0;
  int hits = 0;
  for (std::size_t r = 0; r < relevance.size(); ++r) {
    if (relevance[r] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / hits;
}

std::vector<PrPoint> pr_curve(std::span<const int> relevance) {
  check_relevance(relevance);
  const auto total = std::count_if(relevance.begin(), relevance.end(),
                                   [](int r) { return r != 0; });
  std::vector<PrPoint> curve;
  curve.reserve(relevance.size());
  int hits = 0;
  for (std::size_t r = 0; r < relevance.size(); ++r) {
    if (relevance[r] != 0) ++hits;
    curve.push_back({static_cast<double>(hits) / static_cast<double>(total),
                     static_cast<double>(hits) / static_cast<double>(r + 1)});
  }
  return curve;
}

std::vector<int> ranked_relevance(const ClassDescriptor& query,
                                  const Matrix& gallery,
                                  std::span<const int> gallery_labels,
                                  const Model& model) {
  if (static_cast<Eigen::Index>(gallery_labels.size()) != gallery.rows()) {
    throw DimensionError("gallery label count", gallery.rows(), gallery_labels.size());
  }
  const auto ranked = rank_all(query.signature, gallery, model);
  std::vector<int> flags;
  flags.reserve(ranked.size());
  for (const auto& r : ranked) {
    flags.push_back(
        gallery_labels[static_cast<std::size_t>(r.item_index)] == query.class_id ? 1 : 0);
  }
  return flags;
}

RetrievalReport evaluate_retrieval(std::span<const ClassDescriptor> queries,
                                   const Matrix& gallery,
                                   std::span<const int> gallery_labels,
                                   const Model& model) {
  if (queries.empty()) {
    throw DataError(DataErrorKind::kEmpty, "no retrieval queries");
  }
  RetrievalReport report;
  double sum = 0.0;
  for (const auto& query : queries) {
    const auto flags = ranked_relevance(query, gallery, gallery_labels, model);
    if (std::find(flags.begin(), flags.end(), 1) == flags.end()) {
      throw DataError(DataErrorKind::kInconsistent,
                      "query class " + std::to_string(query.class_id) +
                          " is absent from the gallery");
    }
    const double ap = average_precision(flags);
    sum += ap;
    report.ap_per_class.emplace_back(query.class_id, ap);
    report.pr_per_class.emplace_back(query.class_id, pr_curve(flags));
  }
  report.mean_ap = sum / static_cast<double>(queries.size());
  return report;
}

double mean_average_precision(std::span<const ClassDescriptor> queries,
                              const Matrix& gallery,
                              std::span<const int> gallery_labels,
                              const Model& model) {
  return evaluate_retrieval(queries, gallery, gallery_labels, model).mean_ap;
}

}  // namespace attrmetric
