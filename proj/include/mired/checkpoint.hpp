#pragma once

// Text checkpoint: header (magic, version, seed, classes, topology,
// activations, run metadata), optional standardizer, then one line per
// weight row at 17 significant digits.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mired/dataio.hpp"
#include "mired/neuralnet.hpp"

namespace mired {

inline constexpr const char* kCheckpointMagic = "MIREDCKPT";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  MlpModel model;
  std::vector<std::string> class_names;
  std::vector<std::pair<std::string, std::string>> meta;  // single-token keys
  std::optional<Standardizer> standardizer;

  const std::string* meta_value(const std::string& key) const;
};

std::string checkpoint_to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mired
