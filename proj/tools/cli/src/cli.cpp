#include "attrmetric/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "attrmetric/errors.hpp"
#include "attrmetric/tasks.hpp"

namespace attrmetric::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s << ',';
    if constexpr (std::is_floating_point_v<T>) {
      s << format_double(values[i]);
    } else {
      s << values[i];
    }
  }
  return s.str();
}

std::string flag(bool b) { return b ? "true" : "false"; }

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class Output {
 public:
  Output(const fs::path& path, const std::string& header) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw DataError(DataErrorKind::kMissingFile, "cannot write " + path.string());
    out_ << "# " << header << '\n';
  }
  template <typename T>
  Output& operator<<(const T& value) {
    out_ << value;
    return *this;
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

std::string header(const RunConfig& cfg) {
  return "attrmetric " + cfg.command + " config=" + cfg.fingerprint();
}

void require_path(const fs::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("--") + what + " is required for this command");
}

void require_file(const fs::path& path, const char* what) {
  require_path(path, what);
  if (!fs::exists(path)) {
    throw DataError(DataErrorKind::kMissingFile, std::string(what) + " not found: " + path.string());
  }
}

fs::path prepare_out(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) {
    throw ConfigError("cannot create output directory " + cfg.out.string());
  }
  return cfg.out;
}

fs::path model_path(const RunConfig& cfg) {
  return cfg.model.empty() ? cfg.out / "model.txt" : cfg.model;
}

GridSpec effective_grid(const RunConfig& cfg) {
  GridSpec grid = cfg.grid;
  grid.validate();
  if (cfg.no_constraint) {
    grid.lambdas = {0.0};
    grid.allow_out_of_range = true;
  }
  return grid;
}

Dataset split_rows(const Dataset& ds, const std::string& split) {
  if (!ds.has_labels()) {
    throw DataError(DataErrorKind::kInconsistent, "evaluation needs labels.csv");
  }
  return ds.select_rows(ds.rows_of_classes(ds.split(split)));
}

double split_accuracy(const Dataset& ds, const std::string& split, const Model& model) {
  const Dataset part = split_rows(ds, split);
  const auto descriptors = class_descriptors(part.attributes, part.labels, ds.split(split));
  return zsl_accuracy(part.features, part.labels, descriptors, model);
}

void write_report(const RunConfig& cfg, const TrainReport& report, const fs::path& path) {
  const HyperParams& hp = report.hyper_params;
  Output out(path, header(cfg));
  out << "final_loss=" << format_double(report.final_loss) << '\n'
      << "selected_restart=" << report.selected_restart << '\n'
      << "validation_accuracy_per_restart=" << join(report.validation_accuracy_per_restart) << '\n'
      << "validation_margin_per_restart=" << join(report.validation_margin_per_restart) << '\n'
      << "wall_time_s=" << format_double(report.wall_time_s) << '\n'
      << "m=" << hp.m << '\n'
      << "lambda=" << format_double(hp.lambda) << '\n'
      << "mu=" << format_double(hp.mu) << '\n'
      << "learning-rate=" << format_double(hp.learning_rate) << '\n'
      << "epochs=" << hp.epochs << '\n'
      << "restarts=" << hp.restarts << '\n'
      << "seed=" << hp.seed << '\n'
      << "no-metric=" << flag(cfg.no_metric) << '\n'
      << "no-constraint=" << flag(cfg.no_constraint) << '\n'
      << "loss_per_epoch=" << join(report.loss_per_epoch) << '\n';
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data, "data");
  const Dataset ds = load_dataset(cfg.data);
  const fs::path dir = prepare_out(cfg);
  const HyperParams hp = cfg.effective_hp();
  const TrainResult r =
      train_on_split(ds, "train", hp, cfg.pairs, cfg.grid.holdout_class_fraction, cfg.jobs);
  const fs::path path = model_path(cfg);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_model(r.model, path, header(cfg));
  write_report(cfg, r.report, dir / "train_report.txt");
  out << "model " << path.string() << " final_loss " << format_double(r.report.final_loss)
      << '\n';
  return kOk;
}

int cmd_gridsearch(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data, "data");
  const GridSpec grid = effective_grid(cfg);
  const Dataset ds = load_dataset(cfg.data);
  const fs::path dir = prepare_out(cfg);
  const GridResult r = grid_search(ds, grid, cfg.effective_hp(), cfg.pairs, cfg.jobs);
  {
    Output csv(dir / "grid.csv", header(cfg));
    csv << "m,lambda,mu,validation_accuracy,validation_margin,wall_time_s\n";
    for (const auto& row : r.table) {
      csv << row.m << ',' << format_double(row.lambda) << ',' << format_double(row.mu) << ','
          << format_double(row.validation_accuracy) << ','
          << format_double(row.validation_margin) << ',' << format_double(row.wall_time_s)
          << '\n';
    }
  }
  Output best(dir / "best_config.txt", header(cfg));
  best << "m=" << r.best.m << '\n'
       << "lambda=" << format_double(r.best.lambda) << '\n'
       << "mu=" << format_double(r.best.mu) << '\n';
  out << "best m=" << r.best.m << " lambda=" << format_double(r.best.lambda)
      << " mu=" << format_double(r.best.mu) << '\n';
  return kOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data, "data");
  require_file(cfg.model, "model");
  const Model model = load_model(cfg.model);
  const Dataset ds = load_dataset(cfg.data);
  const fs::path dir = prepare_out(cfg);
  const Dataset part = split_rows(ds, cfg.split);
  const auto descriptors = class_descriptors(part.attributes, part.labels, ds.split(cfg.split));
  const double accuracy = zsl_accuracy(part.features, part.labels, descriptors, model);
  const auto per_class = zsl_per_class_accuracy(part.features, part.labels, descriptors, model);
  const RetrievalReport retrieval =
      evaluate_retrieval(descriptors, part.features, part.labels, model);
  {
    Output csv(dir / "accuracy.csv", header(cfg));
    csv << "class_id,count,accuracy\n";
    for (const auto& c : per_class) {
      csv << c.class_id << ',' << c.count << ',' << format_double(c.accuracy) << '\n';
    }
    csv << "all," << part.size() << ',' << format_double(accuracy) << '\n';
  }
  {
    Output csv(dir / "ap.csv", header(cfg));
    csv << "class_id,ap\n";
    for (const auto& [id, ap] : retrieval.ap_per_class) csv << id << ',' << format_double(ap) << '\n';
    csv << "mean," << format_double(retrieval.mean_ap) << '\n';
  }
  {
    Output csv(dir / "pr_curve.csv", header(cfg));
    csv << "class_id,rank,recall,precision\n";
    for (const auto& [id, curve] : retrieval.pr_per_class) {
      for (std::size_t r = 0; r < curve.size(); ++r) {
        csv << id << ',' << (r + 1) << ',' << format_double(curve[r].recall) << ','
            << format_double(curve[r].precision) << '\n';
      }
    }
  }
  out << "zsl_accuracy " << format_double(accuracy) << " mean_ap "
      << format_double(retrieval.mean_ap) << '\n';
  return kOk;
}

int cmd_dimsweep(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data, "data");
  const Dataset ds = load_dataset(cfg.data);
  std::vector<int> ms = cfg.m_values;
  if (ms.empty()) ms = cfg.grid.m_values(ds.attribute_dim());
  for (int m : ms) {
    if (m < 1) throw ConfigError("dimsweep: m values must be >= 1");
  }
  const fs::path dir = prepare_out(cfg);
  Output csv(dir / "dimsweep.csv", header(cfg));
  csv << "m,accuracy\n";
  int best_m = ms.front();
  double best_acc = -1.0;
  for (int m : ms) {
    HyperParams hp = cfg.effective_hp();
    hp.m = m;
    const TrainResult r =
        train_on_split(ds, "train", hp, cfg.pairs, cfg.grid.holdout_class_fraction, cfg.jobs);
    const double acc = split_accuracy(ds, cfg.split, r.model);
    csv << m << ',' << format_double(acc) << '\n';
    if (acc > best_acc) {
      best_acc = acc;
      best_m = m;
    }
  }
  out << "best m " << best_m << " accuracy " << format_double(best_acc) << '\n';
  return kOk;
}

int cmd_fewshot(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data, "data");
  require_file(cfg.model, "model");
  const Model model = load_model(cfg.model);
  const Dataset ds = load_dataset(cfg.data);
  const fs::path dir = prepare_out(cfg);
  const auto points =
      few_shot_sweep(ds, model, cfg.k_values, cfg.effective_hp(), cfg.pairs, cfg.fewshot);
  Output csv(dir / "fewshot.csv", header(cfg));
  csv << "k,accuracy\n";
  for (const auto& p : points) {
    csv << p.k << ',' << format_double(p.accuracy) << '\n';
    out << "k " << p.k << " accuracy " << format_double(p.accuracy) << '\n';
  }
  return kOk;
}

Vector read_query(const fs::path& path, Eigen::Index p) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorKind::kMissingFile, "cannot open query " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> values;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      values.push_back(parse_double(field, "query " + path.string()));
    }
    if (static_cast<Eigen::Index>(values.size()) != p) {
      throw DataError(DataErrorKind::kDimension,
                      "query has " + std::to_string(values.size()) + " values, model expects " +
                          std::to_string(p));
    }
    const Vector q = Eigen::Map<const Vector>(values.data(), p);
    check_attribute_vector(q);
    return q;
  }
  throw DataError(DataErrorKind::kEmpty, "query file has no vector: " + path.string());
}

int cmd_retrieve(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data, "data");
  require_file(cfg.model, "model");
  if (cfg.query_class.has_value() == !cfg.query_file.empty()) {
    throw ConfigError("retrieve needs exactly one of --query-class and --query-file");
  }
  if (cfg.top_k && cfg.threshold) throw ConfigError("use either --top-k or --threshold");
  if (!cfg.query_file.empty()) require_file(cfg.query_file, "query-file");
  const Model model = load_model(cfg.model);
  const Dataset ds = load_dataset(cfg.data);

  std::vector<Eigen::Index> rows;
  if (ds.has_labels()) {
    rows = ds.rows_of_classes(ds.split(cfg.split));
  } else {
    for (Eigen::Index i = 0; i < ds.size(); ++i) rows.push_back(i);
  }
  const Dataset gallery = ds.select_rows(rows);

  Vector query;
  if (cfg.query_class) {
    const std::vector<int> one{*cfg.query_class};
    query = class_descriptors(gallery.attributes, gallery.labels, one).front().signature;
  } else {
    query = read_query(cfg.query_file, model.attribute_dim());
  }
  std::optional<std::size_t> top_k = cfg.top_k;
  if (!top_k && !cfg.threshold) top_k = 10;
  const auto ranked = retrieve(query, gallery.features, model, cfg.threshold, top_k);
  const fs::path dir = prepare_out(cfg);

  Output csv(dir / "retrieve.csv", header(cfg));
  csv << "rank,item_index,score\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    csv << (r + 1) << ',' << rows[static_cast<std::size_t>(ranked[r].item_index)] << ','
        << format_double(ranked[r].score) << '\n';
  }
  out << "retrieved " << ranked.size() << " items\n";
  return kOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  cfg.synth.validate();
  const fs::path dir = prepare_out(cfg);
  const Dataset ds = synth_generate(cfg.synth);
  save_dataset(ds, dir, header(cfg));
  out << "wrote " << ds.size() << " samples to " << dir.string() << '\n';
  return kOk;
}

}  // namespace

HyperParams RunConfig::effective_hp() const {
  HyperParams h = hp;
  if (no_metric) h.freeze_metric = true;
  if (no_constraint) h.lambda = 0.0;
  return h;
}

std::string RunConfig::canonical() const {
  const HyperParams h = effective_hp();
  std::map<std::string, std::string> kv{
      {"command", command},
      {"no-metric", flag(no_metric)},
      {"no-constraint", flag(no_constraint)},
      {"lambda", format_double(h.lambda)},
      {"mu", format_double(h.mu)},
      {"m", std::to_string(h.m)},
      {"learning-rate", format_double(h.learning_rate)},
      {"momentum", format_double(h.momentum)},
      {"batch-size", std::to_string(h.batch_size)},
      {"epochs", std::to_string(h.epochs)},
      {"restarts", std::to_string(h.restarts)},
      {"seed", std::to_string(h.seed)},
      {"refit-from-init", flag(h.refit_from_init)},
      {"refit-epochs", std::to_string(h.refit_epochs)},
      {"standardize", flag(h.standardize)},
      {"early-stopping-patience", std::to_string(h.early_stopping_patience)},
      {"init-scale-x", format_double(h.init_scale_x)},
      {"positives", std::to_string(pairs.positives_per_image)},
      {"negatives", std::to_string(pairs.negatives_per_image)},
      {"min-negative-distance", format_double(pairs.min_negative_distance)},
      {"grid-m-fractions", join(grid.m_fractions)},
      {"grid-lambdas", join(grid.lambdas)},
      {"grid-mus", join(grid.mus)},
      {"holdout-fraction", format_double(grid.holdout_class_fraction)},
      {"holdout-repeats", std::to_string(grid.holdout_repeats)},
      {"allow-out-of-range", flag(grid.allow_out_of_range)},
      {"fewshot-epochs", std::to_string(fewshot.epochs)},
      {"fewshot-lr-scale", format_double(fewshot.learning_rate_scale)},
      {"split", split},
      {"m-values", join(m_values)},
      {"k-values", join(k_values)},
      {"query-class", query_class ? std::to_string(*query_class) : ""},
      {"query-file", query_file.string()},
      {"top-k", top_k ? std::to_string(*top_k) : ""},
      {"threshold", threshold ? format_double(*threshold) : ""},
      {"synth-classes", std::to_string(synth.n_classes)},
      {"synth-per-class", std::to_string(synth.samples_per_class)},
      {"synth-p", std::to_string(synth.p)},
      {"synth-d", std::to_string(synth.d)},
      {"synth-density", format_double(synth.attribute_density)},
      {"synth-noise", format_double(synth.noise_sigma)},
      {"synth-seed", std::to_string(synth.seed)},
      {"synth-test-classes", std::to_string(synth.test_classes)},
      {"synth-attribute-noise", format_double(synth.attribute_noise_sigma)},
      {"synth-attribute-noise-rank", std::to_string(synth.attribute_noise_rank)},
  };
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  return text;
}

std::string RunConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out,
                                    int& exit_code) {
  RunConfig cfg;
  CLI::App app{"Attribute-space consistency metric learning: train, evaluate, retrieve."};
  app.name("attrmetric");
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value file(s); keys are long option names", false)
      ->expected(1, 8);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.option_defaults()->always_capture_default();

  std::string data, model, outdir = ".", query_file;
  app.add_option("--data", data, "Dataset directory")->group("Paths");
  app.add_option("--model", model, "Model file")->group("Paths");
  app.add_option("--out", outdir, "Output directory")->group("Paths");
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Master seed for training and pairs");
  app.add_option("--jobs", cfg.jobs, "Worker threads for restarts and grid points")
      ->check(CLI::PositiveNumber);
  app.add_flag("--no-metric", cfg.no_metric, "Ablation: w_a fixed to the identity");
  app.add_flag("--no-constraint", cfg.no_constraint, "Ablation: lambda forced to 0");

  HyperParams& hp = cfg.hp;
  const std::string h = "Hyperparameters";
  app.add_option("--lambda", hp.lambda, "Attribute loss weight")->group(h);
  app.add_option("--mu", hp.mu, "Regularizer weight")->group(h);
  app.add_option("--m", hp.m, "Metric dimension")->group(h);
  app.add_option("--learning-rate", hp.learning_rate)->group(h);
  app.add_option("--momentum", hp.momentum)->group(h);
  app.add_option("--batch-size", hp.batch_size)->group(h);
  app.add_option("--epochs", hp.epochs)->group(h);
  app.add_option("--restarts", hp.restarts)->group(h);
  app.add_option("--refit-from-init", hp.refit_from_init,
                 "Retrain the winning initialization on all training pairs")
      ->group(h);
  app.add_option("--refit-epochs", hp.refit_epochs, "Continuation epochs when not refitting from init")
      ->group(h);
  app.add_option("--standardize", hp.standardize)->group(h);
  app.add_option("--early-stopping-patience", hp.early_stopping_patience)->group(h);
  app.add_option("--init-scale-x", hp.init_scale_x)->group(h);

  const std::string p = "Pairs";
  app.add_option("--positives", cfg.pairs.positives_per_image)->group(p);
  app.add_option("--negatives", cfg.pairs.negatives_per_image)->group(p);
  app.add_option("--min-negative-distance", cfg.pairs.min_negative_distance)->group(p);

  const std::string g = "Grid search";
  app.add_option("--grid-m-fractions", cfg.grid.m_fractions)->delimiter(',')->group(g);
  app.add_option("--grid-lambdas", cfg.grid.lambdas)->delimiter(',')->group(g);
  app.add_option("--grid-mus", cfg.grid.mus)->delimiter(',')->group(g);
  app.add_option("--holdout-fraction", cfg.grid.holdout_class_fraction)->group(g);
  app.add_option("--holdout-repeats", cfg.grid.holdout_repeats)->group(g);
  app.add_option("--allow-out-of-range", cfg.grid.allow_out_of_range)->group(g);

  const std::string t = "Tasks";
  app.add_option("--split", cfg.split, "Split evaluated by eval/dimsweep/retrieve")->group(t);
  app.add_option("--m-values", cfg.m_values, "dimsweep m list")->delimiter(',')->group(t);
  app.add_option("--k-values", cfg.k_values, "fewshot k list")->delimiter(',')->group(t);
  app.add_option("--fewshot-epochs", cfg.fewshot.epochs)->group(t);
  app.add_option("--fewshot-lr-scale", cfg.fewshot.learning_rate_scale)->group(t);
  int query_class = 0;
  std::size_t top_k = 0;
  double threshold = 0.0;
  auto* qc = app.add_option("--query-class", query_class)->group(t);
  app.add_option("--query-file", query_file)->group(t);
  auto* tk = app.add_option("--top-k", top_k)->check(CLI::PositiveNumber)->group(t);
  auto* th = app.add_option("--threshold", threshold)->group(t);

  const std::string s = "Synthetic data";
  app.add_option("--preset", cfg.preset, "A or B")->check(CLI::IsMember({"A", "B"}))->group(s);
  SynthSpec o;
  std::vector<std::pair<CLI::Option*, std::function<void(SynthSpec&)>>> overrides;
  auto synth_int = [&](const char* name, int SynthSpec::*field) {
    auto* opt = app.add_option(name, o.*field)->group(s);
    overrides.emplace_back(opt, [field, &o](SynthSpec& spec) { spec.*field = o.*field; });
  };
  auto synth_real = [&](const char* name, double SynthSpec::*field) {
    auto* opt = app.add_option(name, o.*field)->group(s);
    overrides.emplace_back(opt, [field, &o](SynthSpec& spec) { spec.*field = o.*field; });
  };
  synth_int("--synth-classes", &SynthSpec::n_classes);
  synth_int("--synth-per-class", &SynthSpec::samples_per_class);
  synth_int("--synth-p", &SynthSpec::p);
  synth_int("--synth-d", &SynthSpec::d);
  synth_real("--synth-density", &SynthSpec::attribute_density);
  synth_real("--synth-noise", &SynthSpec::noise_sigma);
  synth_int("--synth-test-classes", &SynthSpec::test_classes);
  synth_real("--synth-attribute-noise", &SynthSpec::attribute_noise_sigma);
  synth_int("--synth-attribute-noise-rank", &SynthSpec::attribute_noise_rank);
  auto* synth_seed = app.add_option("--synth-seed", o.seed)->group(s);
  overrides.emplace_back(synth_seed, [&o](SynthSpec& spec) { spec.seed = o.seed; });

  const std::vector<std::pair<const char*, const char*>> commands{
      {"train", "Train on the train split (restarts + refit) and save the model"},
      {"gridsearch", "Class-held-out grid search over m, lambda, mu"},
      {"eval", "Zero-shot accuracy, retrieval AP and PR curves on a split"},
      {"dimsweep", "Zero-shot accuracy as a function of m"},
      {"fewshot", "Accuracy after fine-tuning on k images per unseen class"},
      {"retrieve", "Rank gallery images against an attribute query"},
      {"synth", "Write a synthetic dataset"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    exit_code = app.exit(e, out, out);
    return std::nullopt;
  } catch (const CLI::CallForAllHelp& e) {
    exit_code = app.exit(e, out, out);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  cfg.command = app.get_subcommands().front()->get_name();
  cfg.data = data;
  cfg.model = model;
  cfg.out = outdir;
  cfg.query_file = query_file;
  cfg.hp.seed = seed;
  cfg.pairs.seed = seed;
  if (qc->count()) cfg.query_class = query_class;
  if (tk->count()) cfg.top_k = top_k;
  if (th->count()) cfg.threshold = threshold;
  cfg.synth = cfg.preset == "B" ? SynthSpec::synth_b() : SynthSpec::synth_a();
  for (const auto& [opt, apply] : overrides) {
    if (opt->count()) apply(cfg.synth);
  }

  cfg.hp.validate();
  cfg.pairs.validate();
  cfg.grid.validate();
  if (cfg.jobs < 1) throw ConfigError("--jobs must be >= 1");
  exit_code = kOk;
  return cfg;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  if (cfg.command == "train") return cmd_train(cfg, out);
  if (cfg.command == "gridsearch") return cmd_gridsearch(cfg, out);
  if (cfg.command == "eval") return cmd_eval(cfg, out);
  if (cfg.command == "dimsweep") return cmd_dimsweep(cfg, out);
  if (cfg.command == "fewshot") return cmd_fewshot(cfg, out);
  if (cfg.command == "retrieve") return cmd_retrieve(cfg, out);
  if (cfg.command == "synth") return cmd_synth(cfg, out);
  throw ConfigError("unknown command " + cfg.command);
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    int code = kOk;
    const auto cfg = parse_args(argc, argv, out, code);
    if (!cfg) return code;
    return run(*cfg, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace attrmetric::cli
