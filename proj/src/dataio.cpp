#include "mired/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mired/error.hpp"
#include "mired/textio.hpp"

namespace mired {

namespace {

struct RawRow {
  std::vector<double> features;
  std::string label;
  std::string domain;
};

struct RawTable {
  std::vector<std::string> feature_names;
  std::vector<RawRow> rows;
  std::size_t dropped = 0;
};

RawTable read_raw(const std::filesystem::path& path, const std::string& label_column,
                  const std::optional<std::string>& domain_column) {
  const std::string contents = text::read_file(path);
  std::istringstream in(contents);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) {
      header = text::split_csv_record(line);
      break;
    }
  }
  if (header.empty()) throw IoError("'" + path.string() + "' is empty");
  for (auto& h : header) h = text::trim(h);

  std::optional<std::size_t> label_idx;
  std::optional<std::size_t> domain_idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_idx = i;
    if (domain_column && header[i] == *domain_column) domain_idx = i;
  }
  std::vector<std::string> missing;
  if (!label_idx) missing.push_back("label column '" + label_column + "'");
  if (domain_column && !domain_idx) missing.push_back("domain column '" + *domain_column + "'");
  if (!missing.empty()) {
    std::string msg = "'" + path.string() + "' is missing";
    for (const auto& m : missing) msg += " " + m;
    throw IoError(msg);
  }

  RawTable table;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == *label_idx || (domain_idx && i == *domain_idx)) continue;
    feature_cols.push_back(i);
    table.feature_names.push_back(header[i]);
  }
  const std::string default_domain = path.stem().string();

  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_csv_record(line);
    if (fields.size() != header.size()) {
      ++table.dropped;
      continue;
    }
    RawRow row;
    row.features.reserve(feature_cols.size());
    bool ok = true;
    for (auto c : feature_cols) {
      const auto v = text::parse_double(fields[c]);
      if (!v) {
        ok = false;
        break;
      }
      row.features.push_back(*v);
    }
    row.label = text::trim(fields[*label_idx]);
    if (!ok || row.label.empty()) {
      ++table.dropped;
      continue;
    }
    row.domain = domain_idx ? text::trim(fields[*domain_idx]) : default_domain;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<double> unit_gaussian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  double norm = 0.0;
  for (double& x : v) {
    x = dist(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

const std::vector<std::string>& synth_keys() {
  static const std::vector<std::string> keys = {
      "n_per_domain",     "signal_dims",     "spurious_dims",    "noise_dims",
      "signal_strength",  "spurious_strength", "noise_scale",    "spurious_spread",
      "n_source_domains", "n_cross_domains", "n_ood_domains",    "seed"};
  return keys;
}

std::string synth_value(const SynthSpec& s, const std::string& key) {
  if (key == "n_per_domain") return std::to_string(s.n_per_domain);
  if (key == "signal_dims") return std::to_string(s.signal_dims);
  if (key == "spurious_dims") return std::to_string(s.spurious_dims);
  if (key == "noise_dims") return std::to_string(s.noise_dims);
  if (key == "signal_strength") return text::format_double(s.signal_strength);
  if (key == "spurious_strength") return text::format_double(s.spurious_strength);
  if (key == "noise_scale") return text::format_double(s.noise_scale);
  if (key == "spurious_spread") return text::format_double(s.spurious_spread);
  if (key == "n_source_domains") return std::to_string(s.n_source_domains);
  if (key == "n_cross_domains") return std::to_string(s.n_cross_domains);
  if (key == "n_ood_domains") return std::to_string(s.n_ood_domains);
  if (key == "seed") return std::to_string(s.seed);
  throw ValueError("unknown synthetic spec key '" + key + "'");
}

// Returns an error message, or empty on success.
std::string set_synth_value(SynthSpec& s, const std::string& key, const std::string& value) {
  auto as_count = [&](std::size_t& out) -> std::string {
    const auto v = text::parse_int(value);
    if (!v || *v < 0) return key + ": expected a non-negative integer, got '" + value + "'";
    out = static_cast<std::size_t>(*v);
    return {};
  };
  auto as_real = [&](double& out) -> std::string {
    const auto v = text::parse_double(value);
    if (!v) return key + ": expected a number, got '" + value + "'";
    out = *v;
    return {};
  };
  if (key == "n_per_domain") return as_count(s.n_per_domain);
  if (key == "signal_dims") return as_count(s.signal_dims);
  if (key == "spurious_dims") return as_count(s.spurious_dims);
  if (key == "noise_dims") return as_count(s.noise_dims);
  if (key == "signal_strength") return as_real(s.signal_strength);
  if (key == "spurious_strength") return as_real(s.spurious_strength);
  if (key == "noise_scale") return as_real(s.noise_scale);
  if (key == "spurious_spread") return as_real(s.spurious_spread);
  if (key == "n_source_domains") return as_count(s.n_source_domains);
  if (key == "n_cross_domains") return as_count(s.n_cross_domains);
  if (key == "n_ood_domains") return as_count(s.n_ood_domains);
  if (key == "seed") {
    std::size_t seed = 0;
    auto err = as_count(seed);
    s.seed = seed;
    return err;
  }
  return "unknown key '" + key + "'";
}

}  // namespace

std::string to_string(Role role) {
  switch (role) {
    case Role::source:
      return "source";
    case Role::cross:
      return "cross";
    case Role::ood:
      return "ood";
  }
  return "source";
}

Role role_from_string(const std::string& name) {
  if (name == "source") return Role::source;
  if (name == "cross") return Role::cross;
  if (name == "ood") return Role::ood;
  throw ValueError("unknown role '" + name + "' (expected source, cross or ood)");
}

void DomainDataset::validate() const {
  if (features.rows() != labels.size()) {
    throw ShapeError("dataset '" + name + "': " + std::to_string(features.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (!feature_names.empty() && feature_names.size() != features.cols()) {
    throw ShapeError("dataset '" + name + "': feature name count does not match columns");
  }
  if (!features.all_finite()) throw NumericalError("dataset '" + name + "': non-finite feature");
}

CsvLoadResult load_csv_files(std::span<const std::filesystem::path> paths,
                             const std::string& label_column,
                             const std::optional<std::string>& domain_column) {
  if (paths.empty()) throw IoError("no CSV paths given");
  std::vector<RawTable> tables;
  CsvLoadResult result;
  for (const auto& p : paths) {
    tables.push_back(read_raw(p, label_column, domain_column));
    if (tables.back().feature_names != tables.front().feature_names) {
      throw IoError("'" + p.string() + "' has a different feature layout than '" +
                    paths.front().string() + "'");
    }
    result.dropped_rows += tables.back().dropped;
  }

  std::set<std::string> raw_labels;
  for (const auto& t : tables)
    for (const auto& r : t.rows) raw_labels.insert(r.label);
  if (raw_labels.empty()) throw IoError("no usable rows in the given CSV files");

  std::map<std::string, int> label_index;
  const bool all_int = std::all_of(raw_labels.begin(), raw_labels.end(), [](const auto& l) {
    const auto v = text::parse_int(l);
    return v && *v >= 0 && *v < 1'000'000;
  });
  if (all_int) {
    long long max_label = 0;
    for (const auto& l : raw_labels) {
      const long long v = *text::parse_int(l);
      label_index[l] = static_cast<int>(v);
      max_label = std::max(max_label, v);
    }
    for (long long c = 0; c <= std::max(max_label, 1LL); ++c)
      result.class_names.push_back(std::to_string(c));
  } else {
    for (const auto& l : raw_labels) {
      label_index[l] = static_cast<int>(result.class_names.size());
      result.class_names.push_back(l);
    }
  }

  std::vector<std::string> domain_order;
  std::map<std::string, std::vector<const RawRow*>> by_domain;
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      auto [it, inserted] = by_domain.try_emplace(r.domain);
      if (inserted) domain_order.push_back(r.domain);
      it->second.push_back(&r);
    }
  }
  const auto& names = tables.front().feature_names;
  for (const auto& d : domain_order) {
    const auto& rows = by_domain[d];
    DomainDataset ds;
    ds.name = d;
    ds.feature_names = names;
    ds.features = DenseMatrix(rows.size(), names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy(rows[i]->features.begin(), rows[i]->features.end(), ds.features.row(i).begin());
      ds.labels.push_back(label_index.at(rows[i]->label));
    }
    result.datasets.push_back(std::move(ds));
  }
  if (result.dropped_rows > 0) {
    std::cerr << "warning: dropped " << result.dropped_rows
              << " CSV row(s) with non-numeric, missing or non-finite values\n";
  }
  return result;
}

CsvLoadResult load_csv(const std::filesystem::path& path, const std::string& label_column,
                       const std::optional<std::string>& domain_column) {
  const std::filesystem::path paths[] = {path};
  return load_csv_files(paths, label_column, domain_column);
}

std::string to_csv(const DomainDataset& ds, std::span<const std::string> class_names) {
  std::string out;
  for (const auto& name : ds.feature_names) out += text::csv_field(name) + ",";
  out += "label,domain\n";
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (double v : ds.features.row(r)) out += text::format_double(v) + ",";
    const int label = ds.labels[r];
    out += class_names.empty() ? std::to_string(label)
                               : text::csv_field(class_names[static_cast<std::size_t>(label)]);
    out += "," + text::csv_field(ds.name) + "\n";
  }
  return out;
}

DenseMatrix Standardizer::apply(const DenseMatrix& x) const {
  if (x.cols() != mean.size()) {
    throw ShapeError("standardizer fitted on " + std::to_string(mean.size()) +
                     " features applied to " + x.shape_string());
  }
  DenseMatrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / stddev[c];
  return out;
}

DomainDataset Standardizer::apply(const DomainDataset& ds) const {
  DomainDataset out = ds;
  out.features = apply(ds.features);
  return out;
}

Standardizer fit_standardizer(const DenseMatrix& pool) {
  if (pool.rows() == 0) throw ValueError("fit_standardizer: empty pool");
  const std::size_t n = pool.rows();
  const std::size_t d = pool.cols();
  Standardizer st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  st.constant.assign(d, false);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) st.mean[c] += pool(r, c);
  for (double& m : st.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = pool(r, c) - st.mean[c];
      st.stddev[c] += diff * diff;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    st.stddev[c] = std::sqrt(st.stddev[c] / static_cast<double>(n));
    if (!(st.stddev[c] > 0.0)) {
      st.stddev[c] = 1.0;
      st.constant[c] = true;
    }
  }
  return st;
}

DomainDataset apply_standardizer(const Standardizer& st, const DomainDataset& ds) {
  return st.apply(ds);
}

std::pair<DomainDataset, DomainDataset> split_dataset(const DomainDataset& ds,
                                                      double test_fraction,
                                                      std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ValueError("split_dataset: test fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(ds.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test =
      static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(ds.rows())));
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  auto take = [&](const std::vector<std::size_t>& idx) {
    DomainDataset out;
    out.name = ds.name;
    out.role = ds.role;
    out.feature_names = ds.feature_names;
    out.features = ds.features.select_rows(idx);
    for (auto i : idx) out.labels.push_back(ds.labels[i]);
    return out;
  };
  return {take(train_idx), take(test_idx)};
}

void SynthSpec::validate() const {
  std::vector<std::string> problems;
  if (n_per_domain < 2) problems.emplace_back("n_per_domain must be >= 2");
  if (signal_dims < 1) problems.emplace_back("signal_dims must be >= 1");
  if (spurious_dims < 1) problems.emplace_back("spurious_dims must be >= 1");
  if (noise_dims < 1) problems.emplace_back("noise_dims must be >= 1");
  if (!(signal_strength > 0.0)) problems.emplace_back("signal_strength must be > 0");
  if (!(spurious_strength >= 0.0)) problems.emplace_back("spurious_strength must be >= 0");
  if (!(noise_scale > 0.0)) problems.emplace_back("noise_scale must be > 0");
  if (!(spurious_spread >= 0.0)) problems.emplace_back("spurious_spread must be >= 0");
  if (n_source_domains < 1) problems.emplace_back("n_source_domains must be >= 1");
  if (n_ood_domains < 1) problems.emplace_back("n_ood_domains must be >= 1");
  if (!problems.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValueError(msg);
  }
}

std::string synth_spec_to_text(const SynthSpec& spec) {
  std::string out;
  for (const auto& key : synth_keys()) out += key + " = " + synth_value(spec, key) + "\n";
  return out;
}

SynthSpec synth_spec_from_text(const std::string& contents) {
  SynthSpec spec;
  std::vector<std::string> problems;
  std::istringstream in(contents);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = text::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';' || t == "[synth]") continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string err = set_synth_value(spec, text::trim(t.substr(0, eq)),
                                            text::trim(t.substr(eq + 1)));
    if (!err.empty()) problems.push_back("line " + std::to_string(lineno) + ": " + err);
  }
  if (!problems.empty()) {
    std::string msg = "synthetic spec errors:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValueError(msg);
  }
  spec.validate();
  return spec;
}

std::vector<DomainDataset> generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_scale);

  const std::vector<double> u = unit_gaussian(spec.signal_dims, rng);
  const std::vector<double> shared = unit_gaussian(spec.spurious_dims, rng);
  const std::size_t n_train = spec.n_source_domains + spec.n_cross_domains;
  std::vector<std::vector<double>> train_dirs;
  for (std::size_t d = 0; d < n_train; ++d) {
    const std::vector<double> e = unit_gaussian(spec.spurious_dims, rng);
    std::vector<double> v(spec.spurious_dims);
    double norm = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = shared[k] + spec.spurious_spread * e[k];
      norm += v[k] * v[k];
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    train_dirs.push_back(std::move(v));
  }

  std::vector<std::string> names;
  for (std::size_t k = 0; k < spec.signal_dims; ++k) names.push_back("sig_" + std::to_string(k));
  for (std::size_t k = 0; k < spec.spurious_dims; ++k) names.push_back("spur_" + std::to_string(k));
  for (std::size_t k = 0; k < spec.noise_dims; ++k) names.push_back("noise_" + std::to_string(k));

  auto make_domain = [&](std::string name, Role role, const std::vector<double>& v) {
    DomainDataset ds;
    ds.name = std::move(name);
    ds.role = role;
    ds.feature_names = names;
    const std::size_t n = spec.n_per_domain;
    ds.labels.assign(n, 0);
    std::fill(ds.labels.begin() + static_cast<std::ptrdiff_t>(n / 2), ds.labels.end(), 1);
    std::shuffle(ds.labels.begin(), ds.labels.end(), rng);
    ds.features = DenseMatrix(n, spec.feature_dims());
    for (std::size_t r = 0; r < n; ++r) {
      const double y = ds.labels[r];
      auto row = ds.features.row(r);
      std::size_t c = 0;
      for (std::size_t k = 0; k < spec.signal_dims; ++k)
        row[c++] = y * spec.signal_strength * u[k] + noise(rng);
      for (std::size_t k = 0; k < spec.spurious_dims; ++k)
        row[c++] = y * spec.spurious_strength * v[k] + noise(rng);
      for (std::size_t k = 0; k < spec.noise_dims; ++k) row[c++] = noise(rng);
    }
    return ds;
  };

  std::vector<DomainDataset> out;
  for (std::size_t d = 0; d < spec.n_source_domains; ++d)
    out.push_back(make_domain("source_" + std::to_string(d), Role::source, train_dirs[d]));
  for (std::size_t d = 0; d < spec.n_cross_domains; ++d) {
    out.push_back(make_domain("cross_" + std::to_string(d), Role::cross,
                              train_dirs[spec.n_source_domains + d]));
  }
  for (std::size_t d = 0; d < spec.n_ood_domains; ++d) {
    std::vector<double> flipped = train_dirs[d % spec.n_source_domains];
    for (double& x : flipped) x = -x;
    out.push_back(make_domain("ood_" + std::to_string(d), Role::ood, flipped));
  }
  return out;
}

std::string manifest_to_text(const SynthManifest& m) {
  std::string out = "# mired synthetic data manifest\nformat_version = 1\n";
  out += synth_spec_to_text(m.spec);
  for (const auto& [file, role] : m.files) out += "file = " + file + " " + to_string(role) + "\n";
  return out;
}

SynthManifest manifest_from_text(const std::string& contents) {
  SynthManifest m;
  std::string spec_text;
  std::istringstream in(contents);
  std::string line;
  bool version_seen = false;
  while (std::getline(in, line)) {
    const std::string t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string key = eq == std::string::npos ? t : text::trim(t.substr(0, eq));
    const std::string value = eq == std::string::npos ? "" : text::trim(t.substr(eq + 1));
    if (key == "format_version") {
      if (value != "1") throw ValueError("manifest: unsupported format_version '" + value + "'");
      version_seen = true;
    } else if (key == "file") {
      const auto parts = text::split(value, ' ');
      if (parts.size() != 2) throw ValueError("manifest: bad file line '" + t + "'");
      m.files.emplace_back(parts[0], role_from_string(parts[1]));
    } else {
      spec_text += t + "\n";
    }
  }
  if (!version_seen) throw ValueError("manifest: missing format_version");
  m.spec = synth_spec_from_text(spec_text);
  return m;
}

void write_synthetic(const SynthSpec& spec, const std::vector<DomainDataset>& domains,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SynthManifest m{spec, {}};
  for (const auto& ds : domains) {
    const std::string file = ds.name + ".csv";
    text::write_file(dir / file, to_csv(ds));
    m.files.emplace_back(file, ds.role);
  }
  text::write_file(dir / "manifest.txt", manifest_to_text(m));
}

std::string export_latents(const MlpModel& model, std::span<const DomainDataset> datasets) {
  std::string out = "domain,role,label";
  for (std::size_t k = 1; k <= model.latent_dim(); ++k) out += ",z_" + std::to_string(k);
  out += "\n";
  for (const auto& ds : datasets) {
    if (ds.features.cols() != model.input_dim()) {
      throw ShapeError("export_latents: dataset '" + ds.name + "' has " +
                       std::to_string(ds.features.cols()) + " features, model expects " +
                       std::to_string(model.input_dim()));
    }
    const DenseMatrix z = encode(model, ds.features);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      out += text::csv_field(ds.name) + "," + to_string(ds.role) + "," +
             std::to_string(ds.labels[r]);
      for (double v : z.row(r)) out += "," + text::format_double(v);
      out += "\n";
    }
  }
  return out;
}

}  // namespace mired
