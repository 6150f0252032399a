#pragma once

// Mini-batch training loop: pool assembly from source and cross domains,
// seeded shuffling, loss assembly and the two-rate SGD update.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mired/dataio.hpp"
#include "mired/neuralnet.hpp"
#include "mired/objectives.hpp"

namespace mired {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 200;
  double lr_encoder = 0.005;
  double lr_decoder = 0.005;
  ObjectiveSpec objective;
  double cross_domain_fraction = 0.0;
  std::uint64_t seed = 0;
  std::size_t log_every = 1;  // record every n-th optimizer step

  void validate() const;
};

struct TraceRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double total = 0.0;
  double ce = 0.0;
  double rec = 0.0;
  double reg = 0.0;
  double wall_seconds = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;

  /// One JSON object per line. Wall time is left out when `with_time` is false.
  std::string to_jsonl(bool with_time = true) const;
};

/// Rows used for training with their domain and role tags.
struct TrainingPool {
  DenseMatrix features;
  std::vector<int> labels;
  std::vector<std::size_t> domain;  // index into domain_names
  std::vector<Role> role;
  std::vector<std::string> domain_names;

  std::size_t rows() const { return features.rows(); }
};

/// All source rows plus floor(fraction * total_source / n_cross) rows drawn
/// without replacement from each cross domain.
TrainingPool build_training_pool(std::span<const DomainDataset> source,
                                 std::span<const DomainDataset> cross, double fraction,
                                 std::uint64_t seed);

/// Number of rows taken from each cross domain.
std::size_t cross_rows_per_domain(std::size_t total_source, std::size_t n_cross,
                                  double fraction);

/// Two-group split used by the CORAL and MMD terms: source vs cross rows, or
/// the first domain vs the rest when the pool has no cross rows.
std::vector<int> partition_groups(const TrainingPool& pool);

/// Row indices of every batch in one epoch. For objectives with a
/// partition, batches are stratified by group so both sides are populated.
std::vector<std::vector<std::size_t>> epoch_batches(const TrainingPool& pool,
                                                    const TrainConfig& cfg,
                                                    std::span<const int> groups,
                                                    std::mt19937_64& rng);

struct TrainResult {
  MlpModel model;
  TrainTrace trace;
};

TrainResult train(const TrainingPool& pool, MlpModel model, const TrainConfig& cfg);

}  // namespace mired
