#pragma once

// Experiment configuration: line-oriented [section] key = value files with a
// fixed schema. Unknown keys, out-of-range values and role conflicts are
// collected and reported together.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mired/dataio.hpp"
#include "mired/error.hpp"
#include "mired/neuralnet.hpp"
#include "mired/objectives.hpp"
#include "mired/trainer.hpp"

namespace mired {

class ConfigError : public ValueError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class DataSource { synth, csv };
enum class LabelMode { multiclass, binary };

struct ExperimentConfig {
  // [data]
  DataSource source = DataSource::synth;
  std::vector<std::filesystem::path> paths;
  std::string label_column = "label";
  std::optional<std::string> domain_column;
  LabelMode label_mode = LabelMode::multiclass;
  std::string benign_label;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;

  // [synth]
  SynthSpec synth;

  // [roles]
  std::vector<std::string> source_domains;
  std::vector<std::string> cross_domains;
  std::vector<std::string> ood_domains;

  // [model]
  std::vector<std::size_t> topology;
  Activation hidden_activation = Activation::relu;

  // [objective]; the bandwidth list and kinds expand into the run grid
  std::vector<ObjectiveKind> kinds = {ObjectiveKind::mtls_red};
  ObjectiveSpec objective;
  std::vector<double> bandwidths = {1.0};

  // [train]; fractions and seeds expand into the run grid
  TrainConfig train;
  std::vector<double> fractions = {0.0};
  std::vector<std::uint64_t> seeds = {0};

  Role role_of(const std::string& domain) const;
  bool has_role(const std::string& domain) const;
};

/// Section -> accepted keys.
const std::vector<std::pair<std::string, std::vector<std::string>>>& config_schema();

/// Relative data paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& contents,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(config_to_text(c)) reproduces c.
std::string config_to_text(const ExperimentConfig& cfg);

}  // namespace mired
