// mired command-line entry point.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mired/checkpoint.hpp"
#include "mired/config.hpp"
#include "mired/dataio.hpp"
#include "mired/evalreport.hpp"
#include "mired/experiment.hpp"
#include "mired/gradcheck.hpp"
#include "mired/kernelinfo.hpp"
#include "mired/textio.hpp"

namespace {

using namespace mired;

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
  SynthSpec spec = spec_path.empty() ? SynthSpec{} : synth_spec_from_text(text::read_file(spec_path));
  if (seed) spec.seed = *seed;
  const auto domains = generate_synthetic(spec);
  write_synthetic(spec, domains, out_dir);
  std::cout << "wrote " << domains.size() << " domain CSVs and manifest.txt to " << out_dir
            << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(config_path);
  const auto outputs = run_experiment(cfg, out_dir);
  const auto runs = expand_grid(cfg);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = outputs[i].report;
    std::cout << runs[i].name;
    for (const auto& ra : r.roles)
      std::cout << "  " << to_string(ra.role) << "_acc=" << text::format_double(ra.accuracy);
    std::cout << "  mi_bits=" << text::format_double(r.mean_mi_bits) << "\n";
  }
  std::cout << "wrote " << runs.size() << " run(s) under " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& config_path,
             const std::string& report_dir) {
  const Checkpoint ckpt = load_checkpoint(model_path);
  const ExperimentConfig cfg = load_config(config_path);
  const EvalReport report = evaluate_checkpoint(ckpt, cfg);
  write_eval_outputs(report, ckpt, cfg, report_dir);
  for (const auto& ra : report.roles)
    std::cout << to_string(ra.role) << " accuracy " << text::format_double(ra.accuracy) << "\n";
  std::cout << "mean MI(X;Z) bits " << text::format_double(report.mean_mi_bits) << " over "
            << report.mi_batches << " batch(es)\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::optional<std::size_t> trials) {
  GradcheckOptions opts;
  opts.seed = seed;
  if (trials) {
    opts.entropy_trials = *trials;
    opts.mi_trials = *trials;
    opts.backward_trials = *trials;
  }
  const GradcheckReport report = run_gradcheck(opts);
  std::cout << report.summary();
  for (const auto& c : report.categories) {
    if (!c.pass) std::cerr << "failing instance: " << c.failing_instance << "\n";
  }
  return report.all_pass() ? 0 : 1;
}

int cmd_entropy(const std::string& input, double bandwidth, std::size_t batch) {
  if (batch < 2) throw ValueError("--batch must be at least 2");
  std::istringstream in(text::read_file(input));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_csv_record(line);
    std::vector<double> row;
    bool numeric = true;
    for (const auto& f : fields) {
      const auto v = text::parse_double(text::trim(f));
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw ValueError("line " + std::to_string(lineno) + " is not numeric");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValueError("line " + std::to_string(lineno) + " has a different column count");
    rows.push_back(std::move(row));
  }
  if (rows.size() < batch) {
    throw ValueError("need at least " + std::to_string(batch) + " rows, got " +
                     std::to_string(rows.size()));
  }
  const std::size_t n_batches = rows.size() / batch;
  double sum = 0.0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    DenseMatrix x(batch, rows.front().size());
    for (std::size_t i = 0; i < batch; ++i) {
      const auto& src = rows[b * batch + i];
      std::copy(src.begin(), src.end(), x.row(i).begin());
    }
    const double h = renyi_entropy(normalize_gram(rbf_gram(x, bandwidth))).value;
    sum += h;
    std::cout << "batch " << b << " H2_bits " << text::format_double17(h) << "\n";
  }
  std::cout << "mean H2_bits " << text::format_double17(sum / static_cast<double>(n_batches))
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mired: kernel mutual-information regularized multi-task autoencoders"};
  app.require_subcommand(1);

  std::string spec_path, out_dir;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "generate synthetic multi-domain CSVs");
  synth->add_option("--spec", spec_path, "synthetic spec file (key = value)")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the spec seed");

  std::string config_path, train_out;
  auto* train = app.add_subcommand("train", "train every run of a config grid");
  train->add_option("--config", config_path, "experiment config")->required();
  train->add_option("--out", train_out, "output directory")->required();

  std::string model_path, eval_config, report_dir;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--model", model_path, "checkpoint file")->required();
  eval->add_option("--config", eval_config, "experiment config")->required();
  eval->add_option("--report", report_dir, "report directory")->required();

  std::uint64_t gc_seed = 0;
  std::optional<std::size_t> gc_trials;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gradcheck->add_option("--seed", gc_seed, "random seed");
  gradcheck->add_option("--trials", gc_trials, "instances per category");

  std::string entropy_input;
  double bandwidth = 1.0;
  std::size_t batch = 200;
  auto* entropy = app.add_subcommand("entropy", "second-order matrix entropy of CSV batches");
  entropy->add_option("--input", entropy_input, "numeric CSV")->required();
  entropy->add_option("--bandwidth", bandwidth, "RBF bandwidth");
  entropy->add_option("--batch", batch, "batch size l");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(spec_path, out_dir, synth_seed);
    if (*train) return cmd_train(config_path, train_out);
    if (*eval) return cmd_eval(model_path, eval_config, report_dir);
    if (*gradcheck) return cmd_gradcheck(gc_seed, gc_trials);
    if (*entropy) return cmd_entropy(entropy_input, bandwidth, batch);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
