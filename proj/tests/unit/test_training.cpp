#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

#include "attrmetric/data.hpp"
#include "attrmetric/errors.hpp"
#include "attrmetric/rng.hpp"
#include "attrmetric/training.hpp"
#include "oracles.hpp"

using namespace attrmetric;
namespace ref = attrmetric::testing;

namespace {

SynthSpec small_spec(std::uint64_t seed = 5) {
  SynthSpec s;
  s.n_classes = 6;
  s.samples_per_class = 12;
  s.p = 8;
  s.d = 12;
  s.attribute_density = 0.4;
  s.noise_sigma = 0.05;
  s.seed = seed;
  s.test_classes = 2;
  return s;
}

HyperParams quick_hp() {
  HyperParams hp;
  hp.epochs = 15;
  hp.restarts = 2;
  hp.m = 6;
  hp.batch_size = 20;
  return hp;
}

PairBatch pairs_of(const Dataset& ds, const PairConfig& cfg = {}) {
  return PairBatch::pack(make_pairs(ds.features, ds.attributes, cfg));
}

}  // namespace

TEST_CASE("make_pairs gives one positive and one negative per image") {
  std::mt19937_64 rng(1);
  const Matrix x = ref::random_matrix(10, 4, rng);
  Matrix y(10, 3);
  for (int i = 0; i < 10; ++i) y.row(i) = ref::random_attributes(3, rng).transpose();
  const auto triplets = make_pairs(x, y, PairConfig{});
  REQUIRE(triplets.size() == 20);
  int pos = 0, neg = 0;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    const auto i = static_cast<Eigen::Index>(k / 2);
    CHECK(t.x == x.row(i).transpose());
    if (t.z == 1) {
      ++pos;
      CHECK(t.y == y.row(i).transpose());
    } else {
      REQUIRE(t.z == -1);
      ++neg;
      CHECK((t.y - y.row(i).transpose()).norm() > 0.0);
    }
  }
  CHECK(pos == 10);
  CHECK(neg == 10);
}

TEST_CASE("make_pairs honours counts and the negative distance") {
  std::mt19937_64 rng(2);
  const Matrix x = ref::random_matrix(12, 3, rng);
  Matrix y(12, 5);
  for (int i = 0; i < 12; ++i) y.row(i) = ref::random_attributes(5, rng).transpose();
  PairConfig cfg;
  cfg.positives_per_image = 2;
  cfg.negatives_per_image = 3;
  cfg.min_negative_distance = 0.4;
  const auto triplets = make_pairs(x, y, cfg);
  REQUIRE(triplets.size() == 60);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k / 5);
    if (triplets[k].z == -1) CHECK((triplets[k].y - y.row(i).transpose()).norm() > 0.4);
  }
}

TEST_CASE("make_pairs is deterministic in its seed") {
  const Dataset ds = synth_generate(small_spec());
  PairConfig cfg;
  cfg.seed = 9;
  const auto a = pairs_of(ds, cfg);
  const auto b = pairs_of(ds, cfg);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.z == b.z);
}

TEST_CASE("make_pairs fails when no negative exists, naming the image") {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  Matrix y = Matrix::Constant(2, 2, 0.5);
  try {
    make_pairs(x, y, PairConfig{});
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(e.kind() == DataErrorKind::kNoNegative);
    CHECK(std::string(e.what()).find("image 0") != std::string::npos);
  }
}

TEST_CASE("make_pairs finds a rare valid negative") {
  // Only image 9 differs; the fallback must locate it for every other image.
  Matrix x = Matrix::Zero(10, 1);
  Matrix y = Matrix::Constant(10, 2, 0.5);
  y.row(9) << 1.0, 1.0;
  const auto triplets = make_pairs(x, y, PairConfig{});
  for (const auto& t : triplets) {
    if (t.z == -1) CHECK(t.y.norm() > 0.0);
  }
}

TEST_CASE("sgd_train with a zero learning rate returns the initialization") {
  const Dataset ds = synth_generate(small_spec());
  const PairBatch batch = pairs_of(ds);
  HyperParams hp = quick_hp();
  hp.learning_rate = 0.0;
  const TrainResult r = sgd_train(batch, hp, 17);
  const Model start = initial_model(batch.x.cols(), batch.y.cols(), hp, 17,
                                    Standardizer::fit(batch.x));
  CHECK(r.model == start);
  REQUIRE(r.report.loss_per_epoch.size() == static_cast<std::size_t>(hp.epochs));
  for (double l : r.report.loss_per_epoch) CHECK(l == r.report.loss_per_epoch.front());
}

TEST_CASE("sgd_train reduces the loss and is bit-deterministic") {
  const Dataset ds = synth_generate(SynthSpec::synth_a());
  const PairBatch batch = pairs_of(ds.select_rows(ds.rows_of_classes(ds.split("train"))));
  HyperParams hp;
  hp.epochs = 20;
  const TrainResult a = sgd_train(batch, hp, 3);
  const TrainResult b = sgd_train(batch, hp, 3);
  CHECK(a.model == b.model);
  CHECK(a.report.loss_per_epoch == b.report.loss_per_epoch);
  CHECK(a.report.loss_per_epoch.back() <= a.report.loss_per_epoch.front());
  CHECK(std::isfinite(a.report.final_loss));
}

TEST_CASE("initial model follows the documented scales") {
  HyperParams hp;
  hp.m = 40;
  const Model m = initial_model(400, 50, hp, 1);
  CHECK(m.b_x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.tau == 1.0);
  const double sx = std::sqrt(m.w_x.squaredNorm() / static_cast<double>(m.w_x.size()));
  const double sa = std::sqrt(m.w_a.squaredNorm() / static_cast<double>(m.w_a.size()));
  CHECK(sx == doctest::Approx(1.0 / std::sqrt(400.0)).epsilon(0.05));
  CHECK(sa == doctest::Approx(1.0 / std::sqrt(50.0)).epsilon(0.05));
  hp.freeze_metric = true;
  const Model frozen = initial_model(10, 6, hp, 1);
  CHECK(frozen.w_a == Matrix::Identity(6, 6));
}

TEST_CASE("frozen metric stays the identity through training") {
  const Dataset ds = synth_generate(small_spec());
  HyperParams hp = quick_hp();
  hp.freeze_metric = true;
  const TrainResult r = sgd_train(pairs_of(ds), hp, 4);
  CHECK(r.model.w_a == Matrix::Identity(8, 8));
}

TEST_CASE("divergent learning rate raises a numeric error") {
  const Dataset ds = synth_generate(small_spec());
  HyperParams hp = quick_hp();
  hp.learning_rate = 50.0;
  hp.epochs = 200;
  CHECK_THROWS_AS(sgd_train(pairs_of(ds), hp, 1), NumericError);
}

TEST_CASE("planted linear map is recovered on separable pairs") {
  SynthSpec spec = small_spec(12);
  spec.noise_sigma = 0.0;
  const Dataset ds = synth_generate(spec);
  PairConfig cfg;
  cfg.negatives_per_image = 2;
  const PairBatch batch = pairs_of(ds, cfg);
  HyperParams hp;
  hp.m = 8;
  hp.epochs = 150;
  hp.batch_size = 20;
  hp.lambda = 0.5;
  hp.mu = 0.01;
  const TrainResult r = sgd_train(batch, hp, 2);
  CHECK(pair_accuracy(batch, r.model) >= 0.99);
}

TEST_CASE("multi_restart_train selects a best restart and is deterministic") {
  const Dataset ds = synth_generate(small_spec());
  const auto fit_rows = ds.rows_of_classes(std::vector<int>{0, 1, 2});
  const PairBatch fit = pairs_of(ds.select_rows(fit_rows));
  const ClassHoldout holdout = make_class_holdout(ds, std::vector<int>{3});
  const PairBatch full = pairs_of(ds.select_rows(ds.rows_of_classes(std::vector<int>{0, 1, 2, 3})));
  HyperParams hp = quick_hp();
  hp.restarts = 4;
  const TrainResult a = multi_restart_train(fit, holdout, full, hp);
  const TrainResult b = multi_restart_train(fit, holdout, full, hp, 3);
  CHECK(a.model == b.model);
  const auto& acc = a.report.validation_accuracy_per_restart;
  REQUIRE(acc.size() == 4);
  REQUIRE(a.report.validation_margin_per_restart.size() == 4);
  CHECK(acc[static_cast<std::size_t>(a.report.selected_restart)] ==
        *std::max_element(acc.begin(), acc.end()));
  CHECK(a.report.loss_per_epoch.size() == static_cast<std::size_t>(hp.epochs));
}

TEST_CASE("one restart equals a plain run on the full set from the same seed") {
  const Dataset ds = synth_generate(small_spec());
  const PairBatch full = pairs_of(ds);
  HyperParams hp = quick_hp();
  hp.restarts = 1;
  hp.seed = 8;
  const TrainResult r = multi_restart_train(full, full, full, hp);
  CHECK(r.model == sgd_train(full, hp, derive_seed(8, 0)).model);
  CHECK(r.report.selected_restart == 0);
}

TEST_CASE("continuing refit starts from the selected weights") {
  const Dataset ds = synth_generate(small_spec());
  const PairBatch full = pairs_of(ds);
  HyperParams hp = quick_hp();
  hp.restarts = 1;
  hp.refit_from_init = false;
  hp.refit_epochs = 0;
  const TrainResult r = multi_restart_train(full, full, full, hp);
  CHECK(r.model == sgd_train(full, hp, derive_seed(hp.seed, 0)).model);
}

TEST_CASE("better_score compares accuracy first, then margin") {
  CHECK(better_score({0.9, 0.0}, {0.8, 0.5}));
  CHECK_FALSE(better_score({0.8, 0.5}, {0.9, 0.0}));
  CHECK(better_score({0.9, 0.3}, {0.9, 0.2}));
  CHECK_FALSE(better_score({0.9, 0.2}, {0.9, 0.2}));
}

TEST_CASE("holdout_classes partitions the classes deterministically") {
  const std::vector<int> classes{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto a = holdout_classes(classes, 0.2, 3);
  const auto b = holdout_classes(classes, 0.2, 3);
  CHECK(a.holdout_classes == b.holdout_classes);
  CHECK(a.holdout_classes.size() == 2);
  CHECK(a.fit_classes.size() == 8);
  std::set<int> all(a.fit_classes.begin(), a.fit_classes.end());
  for (int c : a.holdout_classes) CHECK(all.insert(c).second);
  CHECK(all.size() == 10);
  // Five windows of two cover every class once.
  std::multiset<int> seen;
  for (int r = 0; r < 5; ++r) {
    const auto s = holdout_classes(classes, 0.2, 3, r);
    seen.insert(s.holdout_classes.begin(), s.holdout_classes.end());
  }
  for (int c : classes) CHECK(seen.count(c) == 1);
  CHECK_THROWS_AS(holdout_classes(std::vector<int>{4}, 0.2, 1), DataError);
}

TEST_CASE("GridSpec m values and range checks") {
  GridSpec g;
  g.m_fractions = {0.2, 1.2};
  CHECK(g.m_values(100) == std::vector<int>{20, 120});
  CHECK(GridSpec{}.m_values(20) == std::vector<int>{4, 8, 12, 16, 20, 24});
  g.m_fractions = {0.01};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.allow_out_of_range = true;
  CHECK_NOTHROW(g.validate());
  GridSpec h;
  h.lambdas = {};
  CHECK_THROWS_AS(h.validate(), ConfigError);
  GridSpec k;
  k.mus = {20.0};
  CHECK_THROWS_AS(k.validate(), ConfigError);
}

TEST_CASE("grid search over a single point returns it") {
  const Dataset ds = synth_generate(small_spec());
  GridSpec g;
  g.m_fractions = {0.5};
  g.lambdas = {0.25};
  g.mus = {0.1};
  g.holdout_repeats = 2;
  const GridResult r = grid_search(ds, g, quick_hp(), PairConfig{});
  REQUIRE(r.table.size() == 1);
  CHECK(r.best.m == 4);
  CHECK(r.best.lambda == 0.25);
  CHECK(r.best.mu == 0.1);
}

TEST_CASE("grid search picks a row at least as good as the base point") {
  const Dataset ds = synth_generate(small_spec());
  GridSpec g;
  g.m_fractions = {0.5, 1.0};
  g.lambdas = {0.05, 0.5};
  g.mus = {0.01, 1.0};
  g.holdout_repeats = 2;
  HyperParams base = quick_hp();
  base.m = 8;
  base.lambda = 0.5;
  base.mu = 0.01;
  const GridResult r = grid_search(ds, g, base, PairConfig{});
  REQUIRE(r.table.size() == 8);
  double base_acc = -1.0, best_acc = -1.0;
  for (const auto& row : r.table) {
    if (row.m == base.m && row.lambda == base.lambda && row.mu == base.mu)
      base_acc = row.validation_accuracy;
    if (row.m == r.best.m && row.lambda == r.best.lambda && row.mu == r.best.mu)
      best_acc = row.validation_accuracy;
  }
  CHECK(best_acc >= base_acc);
  for (const auto& row : r.table) CHECK(row.validation_accuracy <= best_acc);

  const GridResult again = grid_search(ds, g, base, PairConfig{}, 3);
  for (std::size_t i = 0; i < r.table.size(); ++i)
    CHECK(again.table[i].validation_accuracy == r.table[i].validation_accuracy);
}

TEST_CASE("grid search needs two training classes") {
  Dataset ds = synth_generate(small_spec());
  ds.splits["train"] = {0};
  ds.splits["test"] = {1, 2, 3, 4, 5};
  GridSpec g;
  g.m_fractions = {0.5};
  g.lambdas = {0.25};
  g.mus = {0.1};
  CHECK_THROWS_AS(grid_search(ds, g, quick_hp(), PairConfig{}), DataError);
}

TEST_CASE("train_on_split falls back to pair validation without labels") {
  Dataset ds = synth_generate(small_spec());
  ds.labels.clear();
  const TrainResult r = train_on_split(ds, "train", quick_hp(), PairConfig{}, 0.2);
  CHECK(r.model.feature_dim() == 12);
  CHECK(r.report.validation_accuracy_per_restart.size() == 2);
}

TEST_CASE("few-shot fine-tuning with no epochs or no step leaves the model") {
  const Dataset ds = synth_generate(small_spec());
  const TrainResult r = sgd_train(pairs_of(ds), quick_hp(), 1);
  const auto triplets = make_pairs(ds.features, ds.attributes, PairConfig{});
  FewShotConfig none;
  none.epochs = 0;
  CHECK(few_shot_finetune(r.model, triplets, quick_hp(), none) == r.model);
  FewShotConfig frozen;
  frozen.learning_rate_scale = 0.0;
  CHECK(few_shot_finetune(r.model, triplets, quick_hp(), frozen) == r.model);
  CHECK_THROWS_AS(few_shot_finetune(r.model, {}, quick_hp()), DataError);
}

TEST_CASE("few-shot sweep at k = 0 is the plain zero-shot accuracy") {
  const Dataset ds = synth_generate(small_spec());
  const HyperParams hp = quick_hp();
  const TrainResult r = train_on_split(ds, "train", hp, PairConfig{}, 0.25);
  const std::vector<int> ks{0, 0, 2};
  const auto points = few_shot_sweep(ds, r.model, ks, hp, PairConfig{});
  REQUIRE(points.size() == 3);
  CHECK(points[0].accuracy == points[1].accuracy);
  CHECK(points[2].k == 2);
  const std::vector<int> too_many{12};
  CHECK_THROWS_AS(few_shot_sweep(ds, r.model, too_many, hp, PairConfig{}), DataError);
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  std::vector<int> hits(50, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  try {
    parallel_for(20, 3, [](std::size_t i) {
      if (i == 7 || i == 15) throw std::runtime_error("boom " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "boom 7");
  }
}
