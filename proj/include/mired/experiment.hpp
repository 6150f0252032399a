#pragma once

// Experiment driver shared by the CLI: data loading per config, the
// (objective, fraction, seed, bandwidth) grid, per-run training and
// evaluation, and the on-disk layout of a run.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mired/checkpoint.hpp"
#include "mired/config.hpp"
#include "mired/evalreport.hpp"
#include "mired/trainer.hpp"

namespace mired {

/// Domains with roles assigned, before any standardization.
struct ExperimentData {
  std::vector<DomainDataset> domains;
  std::vector<std::string> class_names;
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

/// Source and cross domains split into train/test; OOD domains are test only.
struct ExperimentSplit {
  std::vector<DomainDataset> train_source;
  std::vector<DomainDataset> train_cross;
  std::vector<DomainDataset> test;  // source tests, cross tests, then OOD
};

ExperimentSplit split_experiment_data(const ExperimentData& data, const ExperimentConfig& cfg);

struct RunSpec {
  ObjectiveKind kind = ObjectiveKind::mtls_red;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double bandwidth = 1.0;
  std::string name;  // <kind>_fXX_sS[_bwB]
};

std::vector<RunSpec> expand_grid(const ExperimentConfig& cfg);
TrainConfig run_train_config(const ExperimentConfig& cfg, const RunSpec& run);

/// The config with every grid list narrowed to the values of one run.
ExperimentConfig run_config(const ExperimentConfig& cfg, const RunSpec& run);

struct RunOutput {
  Checkpoint checkpoint;
  TrainTrace trace;
  EvalReport report;
  double train_seconds = 0.0;
};

/// Trains and evaluates one run in memory.
RunOutput execute_run(const ExperimentConfig& cfg, const ExperimentData& data,
                      const ExperimentSplit& split, const RunSpec& run);

/// Writes model.ckpt, trace.jsonl, config_echo.ini, timing.txt and report/.
void write_run(const RunOutput& out, const ExperimentConfig& cfg, const RunSpec& run,
               const std::filesystem::path& run_dir);

/// Runs the whole grid into `out_dir` and writes grid_summary.csv.
std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_dir);

/// Re-evaluates a checkpoint on the test sets described by `cfg`, using the
/// checkpoint's standardizer and kernel metadata.
EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const ExperimentConfig& cfg);

/// Writes the report tables plus latents.csv into `dir`.
void write_eval_outputs(const EvalReport& report, const Checkpoint& ckpt,
                        const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace mired
