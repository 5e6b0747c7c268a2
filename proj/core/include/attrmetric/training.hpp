#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "attrmetric/data.hpp"
#include "attrmetric/objective.hpp"
#include "attrmetric/tasks.hpp"

namespace attrmetric {

/// How consistent / inconsistent (image, attribute) pairs are drawn.
struct PairConfig {
  int positives_per_image = 1;
  int negatives_per_image = 1;
  /// A negative's attribute vector must be farther than this (Euclidean)
  /// from the image's own vector. Strict inequality, so 0 still rejects
  /// identical vectors.
  double min_negative_distance = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per image i, emits positives (x_i, y_i, +1) then negatives (x_i, y_j, -1)
/// where y_j is another image's attribute vector. Throws DataError
/// (kNoNegative) naming the image when no valid negative exists.
std::vector<Triplet> make_pairs(const Matrix& features, const Matrix& attributes,
                                const PairConfig& cfg);

struct TrainReport {
  double final_loss = 0.0;
  std::vector<double> loss_per_epoch;
  int selected_restart = 0;
  std::vector<double> validation_accuracy_per_restart;
  std::vector<double> validation_margin_per_restart;
  double wall_time_s = 0.0;
  HyperParams hyper_params;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

/// Returns validation accuracy of a candidate model; larger is better.
using Validator = std::function<double(const Model&)>;

/// Random initial model: w_x ~ N(0, 1/d), w_a ~ N(0, 1/p) (or the identity
/// when hp.freeze_metric), b_x = 0, tau = 1.
Model initial_model(Eigen::Index d, Eigen::Index p, const HyperParams& hp,
                    std::uint64_t seed, Standardizer standardizer = {});

/// Minibatch SGD from a random initialization. Fits the feature
/// standardizer on the triplets when hp.standardize is set.
TrainResult sgd_train(std::span<const Triplet> triplets, const HyperParams& hp,
                      std::uint64_t init_seed);
TrainResult sgd_train(const PairBatch& triplets, const HyperParams& hp,
                      std::uint64_t init_seed, const Validator& validator = {});

/// Continues SGD from `start` for `epochs` epochs (standardizer kept).
TrainResult continue_training(const Model& start, const PairBatch& triplets,
                              const HyperParams& hp, int epochs,
                              std::uint64_t shuffle_seed,
                              const Validator& validator = {});

/// Held-out classes scored by zero-shot accuracy.
struct ClassHoldout {
  Matrix features;
  std::vector<int> labels;
  std::vector<ClassDescriptor> descriptors;
};

using ValidationSet = std::variant<PairBatch, ClassHoldout>;

/// ZSL accuracy for a ClassHoldout, pair-classification accuracy otherwise.
double validation_accuracy(const ValidationSet& validation, const Model& model);

/// Continuous tie-breaker for equal accuracies: zsl_margin for a
/// ClassHoldout, mean of clamp(z (tau - S^2), -1, 1) for pairs.
double validation_margin(const ValidationSet& validation, const Model& model);

struct ValidationScore {
  double accuracy = 0.0;
  double margin = 0.0;
};

ValidationScore validation_score(const ValidationSet& validation, const Model& model);

/// Higher accuracy wins; accuracies within 1e-12 fall back to the margin.
bool better_score(const ValidationScore& a, const ValidationScore& b);

/// Trains hp.restarts models on `fit` with seeds derived from hp.seed, keeps
/// the best on `validation`, then continues it for hp.refit_epochs on `full`.
TrainResult multi_restart_train(const PairBatch& fit,
                                const ValidationSet& validation,
                                const PairBatch& full, const HyperParams& hp,
                                int jobs = 1);
TrainResult multi_restart_train(std::span<const Triplet> triplets,
                                const HyperParams& hp,
                                const ValidationSet& validation, int jobs = 1);

/// Hyperparameter grid; m is given as fractions of the attribute dimension.
struct GridSpec {
  std::vector<double> m_fractions{0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
  std::vector<double> lambdas{0.05, 0.25, 1.0};
  std::vector<double> mus{0.01, 0.1, 1.0, 10.0};
  double holdout_class_fraction = 0.2;
  /// Validation accuracy is averaged over this many class holdouts, each a
  /// different window of one shuffled class order (1 = a single holdout).
  int holdout_repeats = 5;
  /// Accept values outside the standard search ranges.
  bool allow_out_of_range = false;

  void validate() const;

  /// round(fraction * p), at least 1, deduplicated, ascending.
  std::vector<int> m_values(Eigen::Index p) const;
};

struct GridRow {
  int m = 0;
  double lambda = 0.0;
  double mu = 0.0;
  double validation_accuracy = 0.0;
  double validation_margin = 0.0;
  double wall_time_s = 0.0;
};

struct GridResult {
  HyperParams best;
  std::vector<GridRow> table;
};

/// Class split used for hyperparameter selection and restart validation.
struct ClassSplit {
  std::vector<int> fit_classes;
  std::vector<int> holdout_classes;
};

/// Randomly holds out round(fraction * n) (at least 1, at most n - 1) of
/// `classes`. Repeat r takes the r-th consecutive window (wrapping) of the
/// same shuffled order. Throws DataError with fewer than 2 classes.
ClassSplit holdout_classes(std::span<const int> classes, double fraction,
                           std::uint64_t seed, int repeat = 0);

ClassHoldout make_class_holdout(const Dataset& dataset,
                                std::span<const int> classes);

/// For every grid point and holdout repeat, trains on the fit classes of the
/// "train" split and scores zero-shot accuracy on the held-out classes; the
/// row reports the means over repeats. The best row maximizes accuracy, then
/// margin; exact ties keep the earlier grid point (m outer, then lambda, then mu).
GridResult grid_search(const Dataset& dataset, const GridSpec& grid,
                       const HyperParams& hp_base, const PairConfig& pairs,
                       int jobs = 1);

/// Full protocol on the classes of `split`: hold out a fraction of classes
/// (or of pairs, without labels) to pick among restarts, then refit the
/// winner on every pair of the split.
TrainResult train_on_split(const Dataset& dataset, const std::string& split,
                           const HyperParams& hp, const PairConfig& pairs,
                           double holdout_class_fraction, int jobs = 1);

/// Few-shot adaptation settings.
struct FewShotConfig {
  int epochs = 50;
  /// Fine-tuning learning rate as a fraction of hp.learning_rate.
  double learning_rate_scale = 0.1;
};

/// Continues SGD on triplets from unseen classes only, starting at `model`.
Model few_shot_finetune(const Model& model, std::span<const Triplet> new_triplets,
                        const HyperParams& hp, const FewShotConfig& cfg = {});

struct FewShotPoint {
  int k = 0;
  double accuracy = 0.0;
};

/// For each k: fine-tunes on the first k images of every unseen class (drawn
/// from a fixed per-class pool of max(k) images) and reports zero-shot
/// accuracy on the remaining unseen-class images. k = 0 is the plain ZSL
/// accuracy on that same evaluation set.
std::vector<FewShotPoint> few_shot_sweep(const Dataset& dataset,
                                         const Model& model,
                                         std::span<const int> k_values,
                                         const HyperParams& hp,
                                         const PairConfig& pairs,
                                         const FewShotConfig& cfg = {});

/// Runs fn(0..n-1) on up to `jobs` threads; fn must write only to its own slot.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace attrmetric
