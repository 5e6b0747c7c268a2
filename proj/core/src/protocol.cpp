#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "attrmetric/errors.hpp"
#include "attrmetric/rng.hpp"
#include "attrmetric/training.hpp"

namespace attrmetric {

namespace {

// Stream indices for derive_seed, kept distinct from restart indices.
constexpr std::uint64_t kHoldoutStream = 1001;
constexpr std::uint64_t kFewShotStream = 2002;
constexpr std::uint64_t kPoolStream = 3003;

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

PairBatch pairs_for_rows(const Dataset& ds, std::span<const Eigen::Index> rows,
                         const PairConfig& cfg) {
  const Dataset sub = ds.select_rows(rows);
  const auto triplets = make_pairs(sub.features, sub.attributes, cfg);
  return PairBatch::pack(triplets);
}

}  // namespace

void GridSpec::validate() const {
  if (m_fractions.empty() || lambdas.empty() || mus.empty()) {
    throw ConfigError("grid: every hyperparameter list must be non-empty");
  }
  if (!(holdout_class_fraction > 0.0 && holdout_class_fraction < 1.0)) {
    throw ConfigError("grid: holdout_class_fraction must be in (0, 1)");
  }
  if (holdout_repeats < 1) throw ConfigError("grid: holdout_repeats must be >= 1");
  for (double f : m_fractions) {
    if (!(f > 0.0)) throw ConfigError("grid: m fractions must be > 0");
    if (!allow_out_of_range && !in_range(f, 0.2, 1.2)) {
      throw ConfigError("grid: m fraction outside [0.2, 1.2]");
    }
  }
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw ConfigError("grid: lambda must be >= 0");
    if (!allow_out_of_range && !in_range(l, 0.05, 1.0)) {
      throw ConfigError("grid: lambda outside [0.05, 1.0]");
    }
  }
  for (double mu : mus) {
    if (!(mu >= 0.0)) throw ConfigError("grid: mu must be >= 0");
    if (!allow_out_of_range && !in_range(mu, 0.01, 10.0)) {
      throw ConfigError("grid: mu outside [0.01, 10.0]");
    }
  }
}

std::vector<int> GridSpec::m_values(Eigen::Index p) const {
  std::set<int> values;
  for (double f : m_fractions) {
    values.insert(std::max(1, static_cast<int>(std::lround(f * static_cast<double>(p)))));
  }
  return {values.begin(), values.end()};
}

ClassSplit holdout_classes(std::span<const int> classes, double fraction,
                           std::uint64_t seed, int repeat) {
  std::vector<int> ids(classes.begin(), classes.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) {
    throw DataError(DataErrorKind::kInconsistent,
                    "need at least 2 training classes to hold out validation classes, got " +
                        std::to_string(ids.size()));
  }
  const auto n = static_cast<long>(ids.size());
  const long held = std::clamp(std::lround(fraction * static_cast<double>(n)), 1L, n - 1);
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  ClassSplit split;
  const long offset = (static_cast<long>(std::max(repeat, 0)) * held) % n;
  for (long i = 0; i < n; ++i) {
    const int id = ids[static_cast<std::size_t>((offset + i) % n)];
    (i < held ? split.holdout_classes : split.fit_classes).push_back(id);
  }
  std::sort(split.holdout_classes.begin(), split.holdout_classes.end());
  std::sort(split.fit_classes.begin(), split.fit_classes.end());
  return split;
}

ClassHoldout make_class_holdout(const Dataset& dataset, std::span<const int> classes) {
  const auto rows = dataset.rows_of_classes(classes);
  const Dataset sub = dataset.select_rows(rows);
  ClassHoldout holdout;
  holdout.features = sub.features;
  holdout.labels = sub.labels;
  holdout.descriptors = class_descriptors(sub.attributes, sub.labels, classes);
  return holdout;
}

GridResult grid_search(const Dataset& dataset, const GridSpec& grid,
                       const HyperParams& hp_base, const PairConfig& pairs,
                       int jobs) {
  grid.validate();
  hp_base.validate();
  if (!dataset.has_labels()) {
    throw DataError(DataErrorKind::kInconsistent,
                    "grid search needs class labels to hold out classes");
  }
  struct Fold {
    PairBatch fit;
    ValidationSet validation;
  };
  std::vector<Fold> folds;
  for (int r = 0; r < grid.holdout_repeats; ++r) {
    const auto split = holdout_classes(dataset.split("train"), grid.holdout_class_fraction,
                                       derive_seed(hp_base.seed, kHoldoutStream), r);
    folds.push_back({pairs_for_rows(dataset, dataset.rows_of_classes(split.fit_classes), pairs),
                     make_class_holdout(dataset, split.holdout_classes)});
  }

  std::vector<int> m_values = grid.m_values(dataset.attribute_dim());
  if (hp_base.freeze_metric) m_values = {static_cast<int>(dataset.attribute_dim())};

  std::vector<HyperParams> points;
  for (int m : m_values) {
    for (double lambda : grid.lambdas) {
      for (double mu : grid.mus) {
        HyperParams hp = hp_base;
        hp.m = m;
        hp.lambda = lambda;
        hp.mu = mu;
        points.push_back(hp);
      }
    }
  }

  GridResult result;
  result.table.resize(points.size());
  const std::uint64_t init_seed = derive_seed(hp_base.seed, 0);
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const HyperParams& hp = points[i];
    double accuracy = 0.0;
    double margin = 0.0;
    for (const Fold& fold : folds) {
      const TrainResult run = sgd_train(fold.fit, hp, init_seed);
      const ValidationScore s = validation_score(fold.validation, run.model);
      accuracy += s.accuracy;
      margin += s.margin;
    }
    GridRow& row = result.table[i];
    row.m = hp.m;
    row.lambda = hp.lambda;
    row.mu = hp.mu;
    row.validation_accuracy = accuracy / static_cast<double>(folds.size());
    row.validation_margin = margin / static_cast<double>(folds.size());
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.table.size(); ++i) {
    const GridRow& row = result.table[i];
    const GridRow& top = result.table[best];
    if (better_score({row.validation_accuracy, row.validation_margin},
                     {top.validation_accuracy, top.validation_margin})) {
      best = i;
    }
  }
  result.best = points[best];
  return result;
}

TrainResult train_on_split(const Dataset& dataset, const std::string& split,
                           const HyperParams& hp, const PairConfig& pairs,
                           double holdout_class_fraction, int jobs) {
  hp.validate();
  if (!(holdout_class_fraction > 0.0 && holdout_class_fraction < 1.0)) {
    throw ConfigError("holdout_class_fraction must be in (0, 1)");
  }
  const std::uint64_t holdout_seed = derive_seed(hp.seed, kHoldoutStream);

  if (dataset.has_labels()) {
    const auto& classes = dataset.split(split);
    const auto rows = dataset.rows_of_classes(classes);
    const PairBatch full = pairs_for_rows(dataset, rows, pairs);
    const auto held = holdout_classes(classes, holdout_class_fraction, holdout_seed);
    const PairBatch fit =
        pairs_for_rows(dataset, dataset.rows_of_classes(held.fit_classes), pairs);
    return multi_restart_train(fit, make_class_holdout(dataset, held.holdout_classes),
                               full, hp, jobs);
  }

  // Without labels the split cannot be resolved: every row is training data
  // and a random subset of images provides pair-accuracy validation.
  auto rows = all_rows(dataset.size());
  const PairBatch full = pairs_for_rows(dataset, rows, pairs);
  Rng rng(holdout_seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto n = static_cast<long>(rows.size());
  const long held = std::clamp(
      std::lround(holdout_class_fraction * static_cast<double>(n)), 2L, std::max(2L, n - 2));
  if (n < 4) {
    throw DataError(DataErrorKind::kInconsistent,
                    "need at least 4 images to hold out validation pairs");
  }
  std::vector<Eigen::Index> val_rows(rows.begin(), rows.begin() + held);
  std::vector<Eigen::Index> fit_rows(rows.begin() + held, rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(fit_rows.begin(), fit_rows.end());
  return multi_restart_train(pairs_for_rows(dataset, fit_rows, pairs),
                             pairs_for_rows(dataset, val_rows, pairs), full, hp, jobs);
}

Model few_shot_finetune(const Model& model, std::span<const Triplet> new_triplets,
                        const HyperParams& hp, const FewShotConfig& cfg) {
  if (cfg.epochs < 0) throw ConfigError("few-shot epochs must be >= 0");
  if (!(cfg.learning_rate_scale >= 0.0)) {
    throw ConfigError("few-shot learning_rate_scale must be >= 0");
  }
  if (new_triplets.empty()) {
    throw DataError(DataErrorKind::kEmpty, "no few-shot triplets");
  }
  HyperParams tuned = hp;
  tuned.learning_rate = hp.learning_rate * cfg.learning_rate_scale;
  tuned.early_stopping_patience = 0;
  return continue_training(model, PairBatch::pack(new_triplets), tuned, cfg.epochs,
                           derive_seed(hp.seed, kFewShotStream))
      .model;
}

std::vector<FewShotPoint> few_shot_sweep(const Dataset& dataset, const Model& model,
                                         std::span<const int> k_values,
                                         const HyperParams& hp,
                                         const PairConfig& pairs,
                                         const FewShotConfig& cfg) {
  if (k_values.empty()) throw ConfigError("few-shot: empty k list");
  const int max_k = *std::max_element(k_values.begin(), k_values.end());
  if (*std::min_element(k_values.begin(), k_values.end()) < 0) {
    throw ConfigError("few-shot: k must be >= 0");
  }
  const auto& test_classes = dataset.split("test");
  const auto test_rows = dataset.rows_of_classes(test_classes);
  const Dataset test = dataset.select_rows(test_rows);
  const auto descriptors = class_descriptors(test.attributes, test.labels, test_classes);

  // Fixed per-class pool of max_k shots; the remainder is the evaluation set.
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (std::size_t r = 0; r < test.labels.size(); ++r) {
    by_class[test.labels[r]].push_back(static_cast<Eigen::Index>(r));
  }
  Rng rng(derive_seed(hp.seed, kPoolStream));
  std::vector<Eigen::Index> eval_rows;
  for (auto& [id, rows] : by_class) {
    if (static_cast<int>(rows.size()) <= max_k) {
      throw DataError(DataErrorKind::kInconsistent,
                      "few-shot: class " + std::to_string(id) + " has " +
                          std::to_string(rows.size()) + " images, need more than " +
                          std::to_string(max_k));
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    eval_rows.insert(eval_rows.end(), rows.begin() + max_k, rows.end());
  }
  std::sort(eval_rows.begin(), eval_rows.end());
  const Dataset eval = test.select_rows(eval_rows);

  std::vector<FewShotPoint> points;
  for (int k : k_values) {
    Model tuned = model;
    if (k > 0) {
      std::vector<Eigen::Index> shot_rows;
      for (const auto& [id, rows] : by_class) {
        shot_rows.insert(shot_rows.end(), rows.begin(), rows.begin() + k);
      }
      const Dataset shots = test.select_rows(shot_rows);
      const auto triplets = make_pairs(shots.features, shots.attributes, pairs);
      tuned = few_shot_finetune(model, triplets, hp, cfg);
    }
    points.push_back({k, zsl_accuracy(eval.features, eval.labels, descriptors, tuned)});
  }
  return points;
}

}  // namespace attrmetric
