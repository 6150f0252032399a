#include "mired/evalreport.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mired/error.hpp"
#include "mired/kernelinfo.hpp"
#include "mired/textio.hpp"

namespace mired {

namespace {

std::string class_label(const std::vector<std::string>& names, int cls) {
  const auto i = static_cast<std::size_t>(cls);
  return i < names.size() ? names[i] : std::to_string(cls);
}

int argmax_row(const DenseMatrix& m, std::size_t r) {
  const auto row = m.row(r);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

const RoleAccuracy* EvalReport::role(Role r) const {
  for (const auto& ra : roles)
    if (ra.role == r) return &ra;
  return nullptr;
}

EvalReport evaluate(const MlpModel& model, std::span<const DomainDataset> datasets,
                    const MiSettings& mi, std::span<const std::string> class_names) {
  model.validate();
  if (datasets.empty()) throw ValueError("evaluate: no datasets");
  if (mi.batch_size < 2) throw ValueError("evaluate: MI batch size must be >= 2");
  KernelConfig{mi.sigma_input, mi.alpha}.validate();
  KernelConfig{mi.sigma_latent, mi.alpha}.validate();

  const std::size_t k = model.n_classes();
  EvalReport report;
  for (std::size_t c = 0; c < k; ++c)
    report.class_names.push_back(c < class_names.size() ? class_names[c] : std::to_string(c));

  std::vector<RoleAccuracy> role_acc = {{Role::source}, {Role::cross}, {Role::ood}};
  double mi_sum = 0.0;
  for (const auto& ds : datasets) {
    ds.validate();
    if (ds.rows() == 0) throw ValueError("evaluate: dataset '" + ds.name + "' is empty");
    if (ds.features.cols() != model.input_dim()) {
      throw ShapeError("evaluate: dataset '" + ds.name + "' has " +
                       std::to_string(ds.features.cols()) + " features, model expects " +
                       std::to_string(model.input_dim()));
    }
    const DenseMatrix z = encode(model, ds.features);
    const DenseMatrix logits = classify_logits(model, z);

    DomainConfusion conf{ds.name, ds.role, std::vector<std::vector<std::size_t>>(
                                               k, std::vector<std::size_t>(k, 0))};
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      const int y = ds.labels[r];
      if (y < 0 || static_cast<std::size_t>(y) >= k) {
        throw ValueError("evaluate: dataset '" + ds.name + "' has label " + std::to_string(y) +
                         " outside the model's " + std::to_string(k) + " classes");
      }
      ++conf.counts[static_cast<std::size_t>(y)][static_cast<std::size_t>(argmax_row(logits, r))];
    }
    auto& ra = role_acc[static_cast<std::size_t>(ds.role)];
    for (std::size_t c = 0; c < k; ++c) {
      ClassRecall cell{ds.name, ds.role, static_cast<int>(c), 0, conf.counts[c][c], 0.0};
      for (auto v : conf.counts[c]) cell.support += v;
      if (cell.support == 0) continue;
      cell.recall = static_cast<double>(cell.correct) / static_cast<double>(cell.support);
      ra.support += cell.support;
      ra.correct += cell.correct;
      report.recalls.push_back(cell);
    }
    report.confusion.push_back(std::move(conf));

    const std::size_t l = mi.batch_size;
    for (std::size_t start = 0; start + l <= ds.rows(); start += l) {
      std::vector<std::size_t> idx(l);
      for (std::size_t i = 0; i < l; ++i) idx[i] = start + i;
      const GramMatrix gx = normalize_gram(rbf_gram(ds.features.select_rows(idx), mi.sigma_input));
      const GramMatrix gz = normalize_gram(rbf_gram(z.select_rows(idx), mi.sigma_latent));
      const double v = mutual_information(gx, gz, mi.alpha);
      report.batch_mi_bits.push_back(v);
      mi_sum += v;
    }
  }
  for (auto& ra : role_acc) {
    if (ra.support == 0) continue;
    ra.accuracy = static_cast<double>(ra.correct) / static_cast<double>(ra.support);
    report.roles.push_back(ra);
  }
  report.mi_batches = report.batch_mi_bits.size();
  report.mean_mi_bits =
      report.mi_batches == 0 ? 0.0 : mi_sum / static_cast<double>(report.mi_batches);
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["metric"] = "per-class recall";
  j["class_names"] = class_names;
  auto& cells = j["recall"] = nlohmann::ordered_json::array();
  for (const auto& c : recalls) {
    cells.push_back({{"domain", c.domain},
                     {"role", to_string(c.role)},
                     {"class", class_label(class_names, c.cls)},
                     {"support", c.support},
                     {"correct", c.correct},
                     {"recall", c.recall}});
  }
  auto& rs = j["accuracy_by_role"] = nlohmann::ordered_json::array();
  for (const auto& r : roles) {
    rs.push_back({{"role", to_string(r.role)},
                  {"support", r.support},
                  {"correct", r.correct},
                  {"accuracy", r.accuracy}});
  }
  auto& cm = j["confusion"] = nlohmann::ordered_json::array();
  for (const auto& c : confusion)
    cm.push_back({{"domain", c.domain}, {"role", to_string(c.role)}, {"counts", c.counts}});
  j["mi_bits"] = {{"mean", mean_mi_bits}, {"batches", mi_batches}, {"per_batch", batch_mi_bits}};
  auto& echo = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_echo) echo[key] = value;
  return j.dump(2) + "\n";
}

std::string EvalReport::recalls_csv() const {
  std::string out = "domain,role,class,support,correct,recall\n";
  for (const auto& c : recalls) {
    out += text::csv_field(c.domain) + "," + to_string(c.role) + "," +
           text::csv_field(class_label(class_names, c.cls)) + "," + std::to_string(c.support) +
           "," + std::to_string(c.correct) + "," + text::format_double(c.recall) + "\n";
  }
  return out;
}

std::string EvalReport::roles_csv() const {
  std::string out = "role,support,correct,accuracy\n";
  for (const auto& r : roles) {
    out += to_string(r.role) + "," + std::to_string(r.support) + "," + std::to_string(r.correct) +
           "," + text::format_double(r.accuracy) + "\n";
  }
  return out;
}

std::string EvalReport::confusion_csv() const {
  std::string out = "domain,role,true_class,predicted_class,count\n";
  for (const auto& c : confusion) {
    for (std::size_t t = 0; t < c.counts.size(); ++t) {
      for (std::size_t p = 0; p < c.counts[t].size(); ++p) {
        out += text::csv_field(c.domain) + "," + to_string(c.role) + "," +
               text::csv_field(class_label(class_names, static_cast<int>(t))) + "," +
               text::csv_field(class_label(class_names, static_cast<int>(p))) + "," +
               std::to_string(c.counts[t][p]) + "\n";
      }
    }
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  text::write_file(dir / "report.json", report.to_json());
  text::write_file(dir / "recalls.csv", report.recalls_csv());
  text::write_file(dir / "roles.csv", report.roles_csv());
  text::write_file(dir / "confusion.csv", report.confusion_csv());
}

DenseMatrix correlation_matrix(const DomainDataset& ds) {
  const std::size_t n = ds.rows();
  const std::size_t d = ds.features.cols();
  if (n < 2) throw ValueError("correlation_matrix: need at least 2 rows");
  const DenseMatrix cov = covariance(ds.features);
  DenseMatrix corr(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (i == j) {
        corr(i, j) = 1.0;
        continue;
      }
      const double denom = std::sqrt(cov(i, i) * cov(j, j));
      corr(i, j) = denom > 0.0 ? std::clamp(cov(i, j) / denom, -1.0, 1.0) : 0.0;
    }
  }
  return corr;
}

std::string correlation_csv(const DenseMatrix& corr, std::span<const std::string> names) {
  if (!corr.is_square() || (!names.empty() && names.size() != corr.rows()))
    throw ShapeError("correlation_csv: names do not match " + corr.shape_string());
  auto name = [&](std::size_t i) {
    return names.empty() ? "f" + std::to_string(i) : text::csv_field(names[i]);
  };
  std::string out = "feature";
  for (std::size_t j = 0; j < corr.cols(); ++j) out += "," + name(j);
  out += "\n";
  for (std::size_t i = 0; i < corr.rows(); ++i) {
    out += name(i);
    for (double v : corr.row(i)) out += "," + text::format_double(v);
    out += "\n";
  }
  return out;
}

RunComparison compare_runs(const EvalReport& a, const EvalReport& b) {
  if (a.class_names != b.class_names)
    throw ValueError("compare_runs: reports have different class lists");
  if (a.recalls.size() != b.recalls.size())
    throw ValueError("compare_runs: reports have different cell counts");
  RunComparison out;
  struct Acc {
    double a = 0.0, b = 0.0, d = 0.0;
    std::size_t n = 0;
  };
  Acc acc[3];
  for (std::size_t i = 0; i < a.recalls.size(); ++i) {
    const auto& ca = a.recalls[i];
    const auto& cb = b.recalls[i];
    if (ca.domain != cb.domain || ca.role != cb.role || ca.cls != cb.cls) {
      throw ValueError("compare_runs: cell " + std::to_string(i) + " differs (" + ca.domain +
                       " vs " + cb.domain + ")");
    }
    const RecallDelta cell{ca.domain, ca.role, ca.cls, ca.recall, cb.recall,
                           ca.recall - cb.recall};
    out.cells.push_back(cell);
    auto& r = acc[static_cast<std::size_t>(ca.role)];
    r.a += cell.a;
    r.b += cell.b;
    r.d += cell.delta;
    ++r.n;
  }
  for (std::size_t r = 0; r < 3; ++r) {
    if (acc[r].n == 0) continue;
    const auto n = static_cast<double>(acc[r].n);
    out.roles.push_back({static_cast<Role>(r), acc[r].a / n, acc[r].b / n, acc[r].d / n});
  }
  return out;
}

std::string RunComparison::to_csv() const {
  std::string out = "domain,role,class,recall_a,recall_b,delta\n";
  for (const auto& c : cells) {
    out += text::csv_field(c.domain) + "," + to_string(c.role) + "," + std::to_string(c.cls) +
           "," + text::format_double(c.a) + "," + text::format_double(c.b) + "," +
           text::format_double(c.delta) + "\n";
  }
  for (const auto& r : roles) {
    out += "mean," + to_string(r.role) + ",," + text::format_double(r.mean_a) + "," +
           text::format_double(r.mean_b) + "," + text::format_double(r.mean_delta) + "\n";
  }
  return out;
}

}  // namespace mired
