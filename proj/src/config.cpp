#include "mired/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "mired/textio.hpp"

namespace mired {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = "configuration has " + std::to_string(problems.size()) + " problem(s):";
  for (const auto& p : problems) msg += "\n  " + p;
  return msg;
}

std::vector<std::string> synth_key_names() {
  std::vector<std::string> keys;
  std::istringstream in(synth_spec_to_text(SynthSpec{}));
  std::string line;
  while (std::getline(in, line)) keys.push_back(text::trim(line.substr(0, line.find('='))));
  return keys;
}

std::vector<std::string> list_items(const std::string& value) {
  std::vector<std::string> out;
  if (text::trim(value).empty()) return out;
  for (const auto& item : text::split(value, ',')) out.push_back(text::trim(item));
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

struct Entry {
  std::string value;
  std::size_t line = 0;
};

class Reader {
 public:
  Reader(std::string section, std::map<std::string, Entry> entries,
         std::vector<std::string>& problems)
      : section_(std::move(section)), entries_(std::move(entries)), problems_(problems) {}

  const Entry* find(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  void fail(const std::string& key, const std::string& what) {
    const Entry* e = find(key);
    problems_.push_back((e ? "line " + std::to_string(e->line) + ": " : "") + section_ + "." +
                        key + ": " + what);
  }

  void str(const std::string& key, std::string& out) {
    if (const Entry* e = find(key)) out = e->value;
  }

  void real(const std::string& key, double& out, double lo, double hi, bool lo_open = false) {
    const Entry* e = find(key);
    if (!e) return;
    const auto v = text::parse_double(e->value);
    if (!v) return fail(key, "expected a number, got '" + e->value + "'");
    if (*v < lo || *v > hi || (lo_open && *v == lo))
      return fail(key, "value " + e->value + " is out of range");
    out = *v;
  }

  template <typename T>
  void count(const std::string& key, T& out, long long lo) {
    const Entry* e = find(key);
    if (!e) return;
    const auto v = text::parse_int(e->value);
    if (!v) return fail(key, "expected an integer, got '" + e->value + "'");
    if (*v < lo) return fail(key, "value " + e->value + " must be >= " + std::to_string(lo));
    out = static_cast<T>(*v);
  }

  template <typename T, typename F>
  void list(const std::string& key, std::vector<T>& out, F parse) {
    const Entry* e = find(key);
    if (!e) return;
    std::vector<T> parsed;
    for (const auto& item : list_items(e->value)) {
      try {
        parsed.push_back(parse(item));
      } catch (const std::exception& ex) {
        return fail(key, ex.what());
      }
    }
    if (parsed.empty()) return fail(key, "list is empty");
    out = std::move(parsed);
  }

 private:
  std::string section_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string>& problems_;
};

double list_real(const std::string& item, double lo, double hi, bool lo_open) {
  const auto v = text::parse_double(item);
  if (!v) throw ValueError("expected a number, got '" + item + "'");
  if (*v < lo || *v > hi || (lo_open && *v == lo))
    throw ValueError("value " + item + " is out of range");
  return *v;
}

long long list_int(const std::string& item, long long lo) {
  const auto v = text::parse_int(item);
  if (!v) throw ValueError("expected an integer, got '" + item + "'");
  if (*v < lo) throw ValueError("value " + item + " must be >= " + std::to_string(lo));
  return *v;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValueError(join_problems(problems)), problems_(std::move(problems)) {}

Role ExperimentConfig::role_of(const std::string& domain) const {
  auto in = [&](const std::vector<std::string>& v) {
    return std::find(v.begin(), v.end(), domain) != v.end();
  };
  if (in(source_domains)) return Role::source;
  if (in(cross_domains)) return Role::cross;
  if (in(ood_domains)) return Role::ood;
  throw ValueError("domain '" + domain + "' has no role in [roles]");
}

bool ExperimentConfig::has_role(const std::string& domain) const {
  for (const auto* v : {&source_domains, &cross_domains, &ood_domains})
    if (std::find(v->begin(), v->end(), domain) != v->end()) return true;
  return false;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& config_schema() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> schema = {
      {"data",
       {"source", "paths", "label_column", "domain_column", "label_mode", "benign_label",
        "test_fraction", "split_seed"}},
      {"synth", synth_key_names()},
      {"roles", {"source", "cross", "ood"}},
      {"model", {"topology", "hidden_activation"}},
      {"objective",
       {"kinds", "beta", "lambda", "lambda2", "bandwidth", "bandwidth_input", "bandwidth_latent",
        "bandwidth_mmd", "alpha"}},
      {"train",
       {"epochs", "batch_size", "lr_encoder", "lr_decoder", "fractions", "seeds", "log_every"}},
  };
  return schema;
}

ExperimentConfig parse_config(const std::string& contents, const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::string synth_text;
  std::set<std::string> seen_sections;

  const auto& schema = config_schema();
  auto section_keys = [&](const std::string& name) -> const std::vector<std::string>* {
    for (const auto& [sec, keys] : schema)
      if (sec == name) return &keys;
    return nullptr;
  };

  std::istringstream in(contents);
  std::string line;
  std::string current;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = text::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') {
        problems.push_back(where + "malformed section header '" + t + "'");
        continue;
      }
      current = text::trim(t.substr(1, t.size() - 2));
      if (!section_keys(current)) problems.push_back(where + "unknown section [" + current + "]");
      else if (!seen_sections.insert(current).second)
        problems.push_back(where + "section [" + current + "] appears twice");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = text::trim(t.substr(0, eq));
    const std::string value = text::trim(t.substr(eq + 1));
    if (current.empty()) {
      problems.push_back(where + "key '" + key + "' outside any section");
      continue;
    }
    const auto* keys = section_keys(current);
    if (!keys) continue;
    if (std::find(keys->begin(), keys->end(), key) == keys->end()) {
      problems.push_back(where + "unknown key '" + key + "' in [" + current + "]");
      continue;
    }
    if (!sections[current].emplace(key, Entry{value, lineno}).second) {
      problems.push_back(where + "duplicate key '" + current + "." + key + "'");
      continue;
    }
    if (current == "synth") synth_text += key + " = " + value + "\n";
  }

  ExperimentConfig cfg;

  {
    Reader r("data", sections["data"], problems);
    if (const Entry* e = r.find("source")) {
      if (e->value == "synth") cfg.source = DataSource::synth;
      else if (e->value == "csv") cfg.source = DataSource::csv;
      else r.fail("source", "expected synth or csv, got '" + e->value + "'");
    }
    if (const Entry* e = r.find("paths")) {
      for (const auto& p : list_items(e->value)) {
        std::filesystem::path path(p);
        cfg.paths.push_back(path.is_relative() && !base_dir.empty() ? base_dir / path : path);
      }
    }
    r.str("label_column", cfg.label_column);
    if (const Entry* e = r.find("domain_column"))
      if (!e->value.empty()) cfg.domain_column = e->value;
    if (const Entry* e = r.find("label_mode")) {
      if (e->value == "multiclass") cfg.label_mode = LabelMode::multiclass;
      else if (e->value == "binary") cfg.label_mode = LabelMode::binary;
      else r.fail("label_mode", "expected multiclass or binary, got '" + e->value + "'");
    }
    r.str("benign_label", cfg.benign_label);
    r.real("test_fraction", cfg.test_fraction, 0.0, 0.95);
    r.count("split_seed", cfg.split_seed, 0);
    if (cfg.source == DataSource::csv && cfg.paths.empty())
      problems.emplace_back("data.paths: required when data.source = csv");
    if (cfg.label_mode == LabelMode::binary && cfg.benign_label.empty())
      problems.emplace_back("data.benign_label: required when data.label_mode = binary");
  }

  if (!synth_text.empty()) {
    try {
      cfg.synth = synth_spec_from_text(synth_text);
    } catch (const std::exception& ex) {
      problems.push_back(std::string("[synth]: ") + ex.what());
    }
  }

  {
    Reader r("roles", sections["roles"], problems);
    auto names = [](const std::string& s) { return s; };
    r.list("source", cfg.source_domains, names);
    r.list("cross", cfg.cross_domains, names);
    r.list("ood", cfg.ood_domains, names);
    if (cfg.source == DataSource::synth && !r.find("source") && !r.find("cross") &&
        !r.find("ood")) {
      for (std::size_t i = 0; i < cfg.synth.n_source_domains; ++i)
        cfg.source_domains.push_back("source_" + std::to_string(i));
      for (std::size_t i = 0; i < cfg.synth.n_cross_domains; ++i)
        cfg.cross_domains.push_back("cross_" + std::to_string(i));
      for (std::size_t i = 0; i < cfg.synth.n_ood_domains; ++i)
        cfg.ood_domains.push_back("ood_" + std::to_string(i));
    }
    if (cfg.source_domains.empty()) problems.emplace_back("roles.source: at least one domain");
    std::map<std::string, int> uses;
    for (const auto* v : {&cfg.source_domains, &cfg.cross_domains, &cfg.ood_domains})
      for (const auto& d : *v) ++uses[d];
    for (const auto& [d, n] : uses)
      if (n > 1) problems.push_back("roles: domain '" + d + "' is assigned more than one role");
    if (cfg.source == DataSource::synth) {
      std::set<std::string> known;
      for (std::size_t i = 0; i < cfg.synth.n_source_domains; ++i)
        known.insert("source_" + std::to_string(i));
      for (std::size_t i = 0; i < cfg.synth.n_cross_domains; ++i)
        known.insert("cross_" + std::to_string(i));
      for (std::size_t i = 0; i < cfg.synth.n_ood_domains; ++i)
        known.insert("ood_" + std::to_string(i));
      for (const auto& [d, n] : uses)
        if (!known.count(d))
          problems.push_back("roles: domain '" + d + "' is not produced by [synth]");
    }
  }

  {
    Reader r("model", sections["model"], problems);
    r.list("topology", cfg.topology,
           [](const std::string& s) { return static_cast<std::size_t>(list_int(s, 1)); });
    if (cfg.topology.size() < 2)
      problems.emplace_back("model.topology: need at least input and latent sizes");
    if (const Entry* e = r.find("hidden_activation")) {
      try {
        cfg.hidden_activation = activation_from_string(e->value);
      } catch (const std::exception& ex) {
        r.fail("hidden_activation", ex.what());
      }
    }
  }

  {
    Reader r("objective", sections["objective"], problems);
    r.list("kinds", cfg.kinds, [](const std::string& s) { return objective_from_string(s); });
    const double inf = std::numeric_limits<double>::max();
    r.real("beta", cfg.objective.beta, 0.0, inf);
    r.real("lambda", cfg.objective.lambda, 0.0, inf);
    r.real("lambda2", cfg.objective.lambda2, 0.0, inf);
    r.list("bandwidth", cfg.bandwidths,
           [&](const std::string& s) { return list_real(s, 0.0, inf, true); });
    auto optional_bw = [&](const std::string& key, std::optional<double>& out) {
      if (!r.find(key)) return;
      double v = 0.0;
      const std::size_t before = problems.size();
      r.real(key, v, 0.0, inf, true);
      if (problems.size() == before) out = v;
    };
    optional_bw("bandwidth_input", cfg.objective.bandwidth_input);
    optional_bw("bandwidth_latent", cfg.objective.bandwidth_latent);
    optional_bw("bandwidth_mmd", cfg.objective.bandwidth_mmd);
    r.real("alpha", cfg.objective.kernel.alpha, 0.0, inf, true);
    if (cfg.objective.kernel.alpha == 1.0) problems.emplace_back("objective.alpha: must not be 1");
    cfg.objective.kernel.bandwidth = cfg.bandwidths.front();
    for (auto kind : cfg.kinds) {
      if (kind == ObjectiveKind::mtls_red && cfg.objective.kernel.alpha != 2.0)
        problems.emplace_back("objective.alpha: mtls_red requires alpha = 2");
    }
  }

  {
    Reader r("train", sections["train"], problems);
    r.count("epochs", cfg.train.epochs, 0);
    r.count("batch_size", cfg.train.batch_size, 2);
    const double inf = std::numeric_limits<double>::max();
    r.real("lr_encoder", cfg.train.lr_encoder, 0.0, inf, true);
    r.real("lr_decoder", cfg.train.lr_decoder, 0.0, inf, true);
    r.list("fractions", cfg.fractions,
           [](const std::string& s) { return list_real(s, 0.0, 0.5, false); });
    r.list("seeds", cfg.seeds,
           [](const std::string& s) { return static_cast<std::uint64_t>(list_int(s, 0)); });
    r.count("log_every", cfg.train.log_every, 1);
    cfg.train.objective = cfg.objective;
    cfg.train.cross_domain_fraction = cfg.fractions.front();
    cfg.train.seed = cfg.seeds.front();
    if (cfg.cross_domains.empty()) {
      for (double f : cfg.fractions) {
        if (f > 0.0) {
          problems.emplace_back("train.fractions: nonzero fraction with no cross domains");
          break;
        }
      }
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(text::read_file(path), path.parent_path());
}

std::string config_to_text(const ExperimentConfig& cfg) {
  auto reals = [](const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(text::format_double(x));
    return join(s);
  };
  std::string out = "[data]\n";
  out += std::string("source = ") + (cfg.source == DataSource::synth ? "synth" : "csv") + "\n";
  if (!cfg.paths.empty()) {
    std::vector<std::string> p;
    for (const auto& path : cfg.paths) p.push_back(path.generic_string());
    out += "paths = " + join(p) + "\n";
  }
  out += "label_column = " + cfg.label_column + "\n";
  if (cfg.domain_column) out += "domain_column = " + *cfg.domain_column + "\n";
  out += std::string("label_mode = ") +
         (cfg.label_mode == LabelMode::binary ? "binary" : "multiclass") + "\n";
  if (!cfg.benign_label.empty()) out += "benign_label = " + cfg.benign_label + "\n";
  out += "test_fraction = " + text::format_double(cfg.test_fraction) + "\n";
  out += "split_seed = " + std::to_string(cfg.split_seed) + "\n";

  out += "\n[synth]\n" + synth_spec_to_text(cfg.synth);

  out += "\n[roles]\n";
  out += "source = " + join(cfg.source_domains) + "\n";
  if (!cfg.cross_domains.empty()) out += "cross = " + join(cfg.cross_domains) + "\n";
  if (!cfg.ood_domains.empty()) out += "ood = " + join(cfg.ood_domains) + "\n";

  out += "\n[model]\n";
  std::vector<std::string> topo;
  for (auto d : cfg.topology) topo.push_back(std::to_string(d));
  out += "topology = " + join(topo) + "\n";
  out += "hidden_activation = " + to_string(cfg.hidden_activation) + "\n";

  out += "\n[objective]\n";
  std::vector<std::string> kinds;
  for (auto k : cfg.kinds) kinds.push_back(to_string(k));
  out += "kinds = " + join(kinds) + "\n";
  out += "beta = " + text::format_double(cfg.objective.beta) + "\n";
  out += "lambda = " + text::format_double(cfg.objective.lambda) + "\n";
  out += "lambda2 = " + text::format_double(cfg.objective.lambda2) + "\n";
  out += "bandwidth = " + reals(cfg.bandwidths) + "\n";
  if (cfg.objective.bandwidth_input)
    out += "bandwidth_input = " + text::format_double(*cfg.objective.bandwidth_input) + "\n";
  if (cfg.objective.bandwidth_latent)
    out += "bandwidth_latent = " + text::format_double(*cfg.objective.bandwidth_latent) + "\n";
  if (cfg.objective.bandwidth_mmd)
    out += "bandwidth_mmd = " + text::format_double(*cfg.objective.bandwidth_mmd) + "\n";
  out += "alpha = " + text::format_double(cfg.objective.kernel.alpha) + "\n";

  out += "\n[train]\n";
  out += "epochs = " + std::to_string(cfg.train.epochs) + "\n";
  out += "batch_size = " + std::to_string(cfg.train.batch_size) + "\n";
  out += "lr_encoder = " + text::format_double(cfg.train.lr_encoder) + "\n";
  out += "lr_decoder = " + text::format_double(cfg.train.lr_decoder) + "\n";
  out += "fractions = " + reals(cfg.fractions) + "\n";
  std::vector<std::string> seeds;
  for (auto s : cfg.seeds) seeds.push_back(std::to_string(s));
  out += "seeds = " + join(seeds) + "\n";
  out += "log_every = " + std::to_string(cfg.train.log_every) + "\n";
  return out;
}

}  // namespace mired
