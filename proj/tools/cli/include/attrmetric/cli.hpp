#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attrmetric/data.hpp"
#include "attrmetric/training.hpp"

namespace attrmetric::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kData = 3,
  kNumeric = 4,
};

/// Everything a command needs, resolved from flags, config file and defaults.
struct RunConfig {
  std::string command;
  std::filesystem::path data;
  std::filesystem::path model;
  std::filesystem::path out{"."};
  int jobs = 1;
  bool no_metric = false;
  bool no_constraint = false;

  HyperParams hp;
  PairConfig pairs;
  GridSpec grid;
  FewShotConfig fewshot;

  std::string split{"test"};
  std::vector<int> m_values;  ///< dimsweep; empty means the grid m values
  std::vector<int> k_values{0, 1, 2, 5, 10};

  std::optional<int> query_class;
  std::filesystem::path query_file;
  std::optional<std::size_t> top_k;
  std::optional<double> threshold;

  std::string preset{"A"};
  SynthSpec synth = SynthSpec::synth_a();

  /// Hyperparameters after the ablation flags are applied.
  HyperParams effective_hp() const;

  /// Sorted key=value lines of every setting that can change an output.
  std::string canonical() const;
  /// 16 hex digits of a 64-bit FNV-1a hash of canonical().
  std::string fingerprint() const;
};

/// Parses argv into a RunConfig. Throws ConfigError; help and version
/// requests are reported through `exit_code` with no config returned.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out,
                                    int& exit_code);

/// Runs one command; returns an ExitCode. Messages go to `out` / `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run with errors mapped to exit codes.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace attrmetric::cli
