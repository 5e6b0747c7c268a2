#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "attrmetric/errors.hpp"
#include "attrmetric/rng.hpp"
#include "attrmetric/training.hpp"

namespace attrmetric {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

bool all_finite(const Gradients& g) {
  return g.d_w_x.allFinite() && g.d_b_x.allFinite() && g.d_w_a.allFinite() &&
         std::isfinite(g.d_tau);
}

// Momentum buffers, same shapes as the model parameters.
struct Velocity {
  Matrix w_x;
  Vector b_x;
  Matrix w_a;
  double tau = 0.0;

  explicit Velocity(const Model& m)
      : w_x(Matrix::Zero(m.w_x.rows(), m.w_x.cols())),
        b_x(Vector::Zero(m.b_x.size())),
        w_a(Matrix::Zero(m.w_a.rows(), m.w_a.cols())) {}
};

}  // namespace

Model initial_model(Eigen::Index d, Eigen::Index p, const HyperParams& hp,
                    std::uint64_t seed, Standardizer standardizer) {
  hp.validate();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Model model;
  model.w_x.resize(d, p);
  const double wx_scale = hp.init_scale_x / std::sqrt(static_cast<double>(d));
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) model.w_x(r, c) = wx_scale * normal(rng);
  }
  model.b_x = Vector::Zero(p);
  if (hp.freeze_metric) {
    model.w_a = Matrix::Identity(p, p);
  } else {
    model.w_a.resize(p, hp.m);
    const double wa_scale = 1.0 / std::sqrt(static_cast<double>(p));
    for (Eigen::Index r = 0; r < p; ++r) {
      for (Eigen::Index c = 0; c < hp.m; ++c) model.w_a(r, c) = wa_scale * normal(rng);
    }
  }
  model.tau = 1.0;
  model.standardizer = std::move(standardizer);
  return model;
}

TrainResult continue_training(const Model& start, const PairBatch& triplets,
                              const HyperParams& hp, int epochs,
                              std::uint64_t shuffle_seed,
                              const Validator& validator) {
  hp.validate();
  if (triplets.size() == 0) {
    throw DataError(DataErrorKind::kEmpty, "no training triplets");
  }
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  start.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  TrainResult result;
  result.model = start;
  result.report.hyper_params = hp;
  result.report.hyper_params.m = static_cast<int>(start.metric_dim());
  Model& model = result.model;
  Velocity velocity(model);

  const Eigen::Index n = triplets.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(shuffle_seed);

  const bool early_stop = validator && hp.early_stopping_patience > 0;
  double best_validation = -1.0;
  Model best_model = model;
  int since_best = 0;

  long step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index begin = 0; begin < n; begin += hp.batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(hp.batch_size, n - begin);
      const PairBatch batch = triplets.gather(
          std::span<const Eigen::Index>(order).subspan(static_cast<std::size_t>(begin),
                                                       static_cast<std::size_t>(count)));
      const Gradients g = gradients(batch, model, hp);
      if (!all_finite(g)) {
        throw NumericError("non-finite gradient, learning rate likely too large",
                           epoch, step);
      }
      // The summed minibatch gradient is averaged over the batch.
      const double step_size = hp.learning_rate / static_cast<double>(count);
      velocity.w_x = hp.momentum * velocity.w_x - step_size * g.d_w_x;
      velocity.b_x = hp.momentum * velocity.b_x - step_size * g.d_b_x;
      velocity.tau = hp.momentum * velocity.tau - step_size * g.d_tau;
      model.w_x += velocity.w_x;
      model.b_x += velocity.b_x;
      model.tau += velocity.tau;
      if (!hp.freeze_metric) {
        velocity.w_a = hp.momentum * velocity.w_a - step_size * g.d_w_a;
        model.w_a += velocity.w_a;
      }
      ++step;
    }

    const double loss = total_loss(triplets, model, hp);
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite training loss", epoch, step);
    }
    result.report.loss_per_epoch.push_back(loss);

    if (early_stop) {
      const double acc = validator(model);
      if (acc > best_validation) {
        best_validation = acc;
        best_model = model;
        since_best = 0;
      } else if (++since_best >= hp.early_stopping_patience) {
        model = best_model;
        break;
      }
    }
  }
  if (early_stop && best_validation >= 0.0) {
    model = best_model;
    result.report.final_loss = total_loss(triplets, model, hp);
  } else if (result.report.loss_per_epoch.empty()) {
    result.report.final_loss = total_loss(triplets, model, hp);
  } else {
    result.report.final_loss = result.report.loss_per_epoch.back();
  }
  result.report.wall_time_s = seconds_since(wall_start);
  return result;
}

TrainResult sgd_train(const PairBatch& triplets, const HyperParams& hp,
                      std::uint64_t init_seed, const Validator& validator) {
  hp.validate();
  if (triplets.size() == 0) {
    throw DataError(DataErrorKind::kEmpty, "no training triplets");
  }
  Standardizer standardizer;
  if (hp.standardize) standardizer = Standardizer::fit(triplets.x);
  const Model start = initial_model(triplets.x.cols(), triplets.y.cols(), hp,
                                    init_seed, std::move(standardizer));
  return continue_training(start, triplets, hp, hp.epochs,
                           derive_seed(init_seed, 1), validator);
}

TrainResult sgd_train(std::span<const Triplet> triplets, const HyperParams& hp,
                      std::uint64_t init_seed) {
  return sgd_train(PairBatch::pack(triplets), hp, init_seed);
}

double validation_accuracy(const ValidationSet& validation, const Model& model) {
  if (const auto* holdout = std::get_if<ClassHoldout>(&validation)) {
    return zsl_accuracy(holdout->features, holdout->labels, holdout->descriptors,
                        model);
  }
  return pair_accuracy(std::get<PairBatch>(validation), model);
}

double validation_margin(const ValidationSet& validation, const Model& model) {
  if (const auto* holdout = std::get_if<ClassHoldout>(&validation)) {
    return zsl_margin(holdout->features, holdout->labels, holdout->descriptors, model);
  }
  const auto& batch = std::get<PairBatch>(validation);
  if (batch.size() == 0) throw DataError(DataErrorKind::kEmpty, "empty validation pairs");
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const double s2 = score_squared(batch.x.row(i).transpose(), batch.y.row(i).transpose(), model);
    total += std::clamp(batch.z(i) * (model.tau - s2), -1.0, 1.0);
  }
  return total / static_cast<double>(batch.size());
}

ValidationScore validation_score(const ValidationSet& validation, const Model& model) {
  return {validation_accuracy(validation, model), validation_margin(validation, model)};
}

bool better_score(const ValidationScore& a, const ValidationScore& b) {
  if (std::abs(a.accuracy - b.accuracy) > 1e-12) return a.accuracy > b.accuracy;
  return a.margin > b.margin;
}

TrainResult multi_restart_train(const PairBatch& fit,
                                const ValidationSet& validation,
                                const PairBatch& full, const HyperParams& hp,
                                int jobs) {
  hp.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  const auto restarts = static_cast<std::size_t>(hp.restarts);

  Validator validator;
  if (hp.early_stopping_patience > 0) {
    validator = [&validation](const Model& m) { return validation_accuracy(validation, m); };
  }

  std::vector<TrainResult> runs(restarts);
  std::vector<ValidationScore> scores(restarts);
  parallel_for(restarts, jobs, [&](std::size_t r) {
    runs[r] = sgd_train(fit, hp, derive_seed(hp.seed, r), validator);
    scores[r] = validation_score(validation, runs[r].model);
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (better_score(scores[r], scores[best])) best = r;
  }
  std::vector<double> accuracy;
  std::vector<double> margin;
  for (const auto& s : scores) {
    accuracy.push_back(s.accuracy);
    margin.push_back(s.margin);
  }

  TrainResult result;
  if (hp.refit_from_init) {
    // Continuing would keep the directions of w_a that collapsed on the fit
    // subset: their gradient is proportional to w_a itself.
    HyperParams refit = hp;
    refit.early_stopping_patience = 0;
    result = sgd_train(full, refit, derive_seed(hp.seed, best));
  } else {
    result = continue_training(runs[best].model, full, hp, hp.refit_epochs,
                               derive_seed(hp.seed, restarts));
    result.report.loss_per_epoch = runs[best].report.loss_per_epoch;
  }
  result.report.selected_restart = static_cast<int>(best);
  result.report.validation_accuracy_per_restart = accuracy;
  result.report.validation_margin_per_restart = margin;
  result.report.wall_time_s = seconds_since(wall_start);
  return result;
}

TrainResult multi_restart_train(std::span<const Triplet> triplets,
                                const HyperParams& hp,
                                const ValidationSet& validation, int jobs) {
  const PairBatch batch = PairBatch::pack(triplets);
  return multi_restart_train(batch, validation, batch, hp, jobs);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  // Report the failure of the lowest index so errors are deterministic.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace attrmetric
