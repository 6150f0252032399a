#pragma once

// Per-class and per-role evaluation, held-out MI measurement, correlation
// matrices and run-to-run comparison.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mired/dataio.hpp"
#include "mired/densemath.hpp"
#include "mired/neuralnet.hpp"

namespace mired {

/// Kernel settings for the MI measurement. Batches have the training size l.
struct MiSettings {
  double sigma_input = 1.0;
  double sigma_latent = 1.0;
  double alpha = 2.0;
  std::size_t batch_size = 200;
};

/// Recall of one class within one domain (the reported table cell).
struct ClassRecall {
  std::string domain;
  Role role = Role::source;
  int cls = 0;
  std::size_t support = 0;
  std::size_t correct = 0;
  double recall = 0.0;  // 0 when support is 0
};

struct RoleAccuracy {
  Role role = Role::source;
  std::size_t support = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct DomainConfusion {
  std::string domain;
  Role role = Role::source;
  std::vector<std::vector<std::size_t>> counts;  // [true][predicted]
};

struct EvalReport {
  std::vector<std::string> class_names;
  std::vector<ClassRecall> recalls;
  std::vector<RoleAccuracy> roles;  // roles present, in source/cross/ood order
  std::vector<DomainConfusion> confusion;
  double mean_mi_bits = 0.0;        // over all full batches
  std::size_t mi_batches = 0;
  std::vector<double> batch_mi_bits;
  std::vector<std::pair<std::string, std::string>> config_echo;
  double runtime_seconds = 0.0;     // not part of the serialized report

  const RoleAccuracy* role(Role r) const;

  std::string to_json() const;
  std::string recalls_csv() const;
  std::string roles_csv() const;
  std::string confusion_csv() const;
};

/// Classifies every row by argmax of the logits and measures MI(X;Z) over
/// consecutive full batches of each dataset (shorter remainders are skipped).
EvalReport evaluate(const MlpModel& model, std::span<const DomainDataset> datasets,
                    const MiSettings& mi, std::span<const std::string> class_names = {});

/// Writes report.json, recalls.csv, roles.csv and confusion.csv into `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

/// Pearson correlation of the feature columns. Constant features get 0
/// off the diagonal and 1 on it.
DenseMatrix correlation_matrix(const DomainDataset& ds);
std::string correlation_csv(const DenseMatrix& corr, std::span<const std::string> names);

struct RecallDelta {
  std::string domain;
  Role role = Role::source;
  int cls = 0;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // a - b
};

struct RoleDelta {
  Role role = Role::source;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double mean_delta = 0.0;  // arithmetic mean over the role's cells
};

struct RunComparison {
  std::vector<RecallDelta> cells;
  std::vector<RoleDelta> roles;

  std::string to_csv() const;
};

RunComparison compare_runs(const EvalReport& a, const EvalReport& b);

}  // namespace mired
