#pragma once

// Domain-tagged datasets: CSV ingestion, standardization, train/test
// splitting, the synthetic spurious-correlation generator and latent export.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mired/densemath.hpp"
#include "mired/neuralnet.hpp"

namespace mired {

enum class Role { source, cross, ood };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

struct DomainDataset {
  std::string name;
  Role role = Role::source;
  DenseMatrix features;  // n x d
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return features.rows(); }
  void validate() const;
};

struct CsvLoadResult {
  std::vector<DomainDataset> datasets;  // one per domain value, in order of first appearance
  std::vector<std::string> class_names;  // class index -> raw label
  std::size_t dropped_rows = 0;          // non-numeric / NaN / Inf / ragged rows
};

/// Loads one or more CSVs sharing a header layout. Labels are encoded
/// jointly across files: integer labels keep their value as class index,
/// anything else is indexed in sorted order.
CsvLoadResult load_csv_files(std::span<const std::filesystem::path> paths,
                             const std::string& label_column,
                             const std::optional<std::string>& domain_column);

CsvLoadResult load_csv(const std::filesystem::path& path, const std::string& label_column,
                       const std::optional<std::string>& domain_column);

std::string to_csv(const DomainDataset& ds, std::span<const std::string> class_names = {});

/// Population (n-denominator) per-feature standardization.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;      // 1 for constant features
  std::vector<bool> constant;

  DenseMatrix apply(const DenseMatrix& x) const;
  DomainDataset apply(const DomainDataset& ds) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

Standardizer fit_standardizer(const DenseMatrix& pool);
DomainDataset apply_standardizer(const Standardizer& st, const DomainDataset& ds);

/// Seeded row split into (train, test); test gets floor(n * test_fraction) rows.
std::pair<DomainDataset, DomainDataset> split_dataset(const DomainDataset& ds,
                                                      double test_fraction, std::uint64_t seed);

struct SynthSpec {
  std::size_t n_per_domain = 2000;
  std::size_t signal_dims = 4;
  std::size_t spurious_dims = 8;
  std::size_t noise_dims = 4;
  double signal_strength = 1.0;
  double spurious_strength = 2.0;
  double noise_scale = 1.0;
  // How far each training domain's spurious direction strays from the shared
  // one: v_d = normalize(v_shared + spurious_spread * e_d).
  double spurious_spread = 0.5;
  std::size_t n_source_domains = 2;
  std::size_t n_cross_domains = 1;
  std::size_t n_ood_domains = 2;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t feature_dims() const { return signal_dims + spurious_dims + noise_dims; }

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

/// key = value lines (the keys of SynthSpec).
std::string synth_spec_to_text(const SynthSpec& spec);
SynthSpec synth_spec_from_text(const std::string& text);

/// Binary-label domains. Features are [signal | spurious | noise]:
///   signal   = y * mu * u   + N(0, noise^2)   (u shared by every domain)
///   spurious = y * c * v_d  + N(0, noise^2)   (v_d per domain; OOD domains
///                                              use the negation of a source
///                                              domain's direction)
///   noise    = N(0, noise^2)
std::vector<DomainDataset> generate_synthetic(const SynthSpec& spec);

/// Writes one CSV per domain plus manifest.txt.
void write_synthetic(const SynthSpec& spec, const std::vector<DomainDataset>& domains,
                     const std::filesystem::path& dir);

struct SynthManifest {
  SynthSpec spec;
  std::vector<std::pair<std::string, Role>> files;  // file name, role
};
std::string manifest_to_text(const SynthManifest& m);
SynthManifest manifest_from_text(const std::string& text);

/// CSV with columns domain, role, label, z_1 ... z_dz.
std::string export_latents(const MlpModel& model, std::span<const DomainDataset> datasets);

}  // namespace mired
