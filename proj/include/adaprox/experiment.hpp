#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "adaprox/controllers.hpp"
#include "adaprox/problems.hpp"
#include "adaprox/prox.hpp"
#include "adaprox/sampling.hpp"
#include "adaprox/solver.hpp"

namespace adaprox {

/// Declarative description of one sweep. Parsed from a JSON tree; every field
/// has a default so that `{"problem": {...}}` is a complete config.
struct ExperimentConfig {
  /// {"type": "logistic" | "synthetic_onehot" | "quadratic", ...}
  nlohmann::json problem;
  /// "default" (l1 with lambda for logistic, zero for quadratic) or
  /// {"type": "zero" | "l1" | "nonneg" | "box", ...}
  nlohmann::json regularizer = "default";
  std::vector<ControllerConfig> controllers;

  enum class StepMode { kGrid, kTheory, kFixed };
  StepMode step_mode = StepMode::kGrid;
  std::vector<double> alpha_grid;
  double theory_eta = 0.5;

  std::vector<std::uint64_t> seeds;
  double max_epochs = 100.0;
  double step_tolerance = 1e-8;
  std::size_t initial_batch = 2;
  std::size_t record_every = 1;
  double record_every_epochs = 0.0;
  std::optional<std::size_t> max_iterations;
  SamplingMode sampling = SamplingMode::kWithReplacement;
  bool resample_all = false;
  bool timing = false;
  unsigned jobs = 1;
  std::filesystem::path output = "adaprox_out";

  std::size_t reference_iterations = 50000;
  std::optional<double> reference_alpha;

  /// Keep every cell's trace in memory (ExperimentSummary::cells[i].trace).
  bool keep_traces = false;
};

/// {2^-10, 2^-7, ..., 2^14, 2^15}
std::vector<double> default_alpha_grid();

/// Default seed list: ADAPROX_SEED (or 1) followed by the next n - 1 integers.
std::vector<std::uint64_t> default_seeds(std::size_t n = 5);

/// Throws ConfigError with the offending key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config, including defaults.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Command-line overrides applied on top of a config file.
struct ConfigOverrides {
  std::optional<std::string> controller;
  std::optional<double> eta;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<double> max_epochs;
  std::optional<std::filesystem::path> out;
  std::optional<unsigned> jobs;
};

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o);

/// FNV-1a 64 hex of the canonical JSON of the given config.
std::string config_hash(const ExperimentConfig& cfg);
/// Hash of the fields that determine phi* (problem, regularizer, reference).
std::string reference_hash(const ExperimentConfig& cfg);

struct BuiltProblem {
  std::shared_ptr<StochasticProblem> problem;
  ProxFunction h = ProxFunction::zero(1);
  Vector x0;
  std::string description;
};

BuiltProblem build_problem(const ExperimentConfig& cfg);

struct ReferenceRecord {
  double phi_star = 0.0;
  double x_norm = 0.0;
  double alpha = 0.0;
  std::size_t iterations = 0;
  std::string hash;
  bool cached = false;
};

/// Deterministic proximal gradient run for phi*; result stored in
/// <output>/reference.json and reused while its hash matches.
ReferenceRecord compute_reference(const ExperimentConfig& cfg);
ReferenceRecord compute_reference(const ExperimentConfig& cfg, const BuiltProblem& built);

struct CellResult {
  std::string cell;
  std::string series_label;
  std::string method;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::filesystem::path trace_file;
  double final_gap = 0.0;
  double final_effective_evaluations = 0.0;
  std::uint64_t cumulative_samples = 0;
  std::string termination;
  /// Empty on success.
  std::string error;
  bool numerical_failure = false;
  std::vector<RunRecord> trace;
};

struct BestRun {
  std::string series_label;
  std::string method;
  double alpha = 0.0;
  double mean_final_gap = 0.0;
  double mean_effective_evaluations = 0.0;
};

struct ExperimentSummary {
  std::filesystem::path directory;
  ReferenceRecord reference;
  std::vector<CellResult> cells;
  /// One entry per configured controller, in config order.
  std::vector<BestRun> best;
  bool numerical_failure = false;
};

/// Runs every (controller, alpha, seed) cell, writing trace_<cell>.csv,
/// config.json, reference.json, summary.json and best_comparison.csv.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

/// Writes plot_gap_vs_evals.csv and plot_batch_fraction.csv from the traces
/// listed in <dir>/summary.json; returns the written paths. Throws StateError
/// listing every missing trace file.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& dir);

/// Stable file-name fragment for a cell.
std::string cell_name(const ControllerConfig& c, double alpha, std::uint64_t seed);

}  // namespace adaprox
