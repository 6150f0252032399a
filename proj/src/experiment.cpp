#include "mired/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "mired/error.hpp"
#include "mired/textio.hpp"

namespace mired {

namespace {

std::string meta_or(const Checkpoint& ckpt, const std::string& key) {
  const std::string* v = ckpt.meta_value(key);
  if (!v) throw IoError("checkpoint has no '" + key + "' metadata");
  return *v;
}

double meta_real(const Checkpoint& ckpt, const std::string& key) {
  const auto v = text::parse_double(meta_or(ckpt, key));
  if (!v) throw IoError("checkpoint metadata '" + key + "' is not a number");
  return *v;
}

std::vector<DomainDataset> standardized_tests(const Checkpoint& ckpt,
                                              const ExperimentConfig& cfg) {
  if (!ckpt.standardizer) throw IoError("checkpoint has no standardizer block");
  const ExperimentData data = load_experiment_data(cfg);
  const ExperimentSplit split = split_experiment_data(data, cfg);
  std::vector<DomainDataset> tests;
  for (const auto& ds : split.test) {
    if (ds.features.cols() != ckpt.model.input_dim()) {
      throw ShapeError("checkpoint expects " + std::to_string(ckpt.model.input_dim()) +
                       " features, data has " + std::to_string(ds.features.cols()));
    }
    tests.push_back(ckpt.standardizer->apply(ds));
  }
  return tests;
}

std::vector<std::pair<std::string, std::string>> echo_pairs(const ExperimentConfig& cfg,
                                                            const RunSpec& run) {
  const TrainConfig tc = run_train_config(cfg, run);
  return {{"run", run.name},
          {"objective", to_string(run.kind)},
          {"cross_domain_fraction", text::format_double(run.fraction)},
          {"seed", std::to_string(run.seed)},
          {"beta", text::format_double(tc.objective.beta)},
          {"lambda", text::format_double(tc.objective.lambda)},
          {"lambda2", text::format_double(tc.objective.lambda2)},
          {"bandwidth_input", text::format_double(tc.objective.sigma_input())},
          {"bandwidth_latent", text::format_double(tc.objective.sigma_latent())},
          {"bandwidth_mmd", text::format_double(tc.objective.sigma_mmd())},
          {"alpha", text::format_double(tc.objective.kernel.alpha)},
          {"epochs", std::to_string(tc.epochs)},
          {"batch_size", std::to_string(tc.batch_size)},
          {"lr_encoder", text::format_double(tc.lr_encoder)},
          {"lr_decoder", text::format_double(tc.lr_decoder)}};
}

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  ExperimentData data;
  if (cfg.source == DataSource::synth) {
    data.domains = generate_synthetic(cfg.synth);
    data.class_names = {"0", "1"};
    for (const auto& ds : data.domains) {
      if (!cfg.has_role(ds.name))
        throw ValueError("synthetic domain '" + ds.name + "' has no role in [roles]");
    }
  } else {
    CsvLoadResult loaded = load_csv_files(cfg.paths, cfg.label_column, cfg.domain_column);
    data.domains = std::move(loaded.datasets);
    data.class_names = std::move(loaded.class_names);
    if (cfg.label_mode == LabelMode::binary) {
      int benign = -1;
      for (std::size_t c = 0; c < data.class_names.size(); ++c)
        if (data.class_names[c] == cfg.benign_label) benign = static_cast<int>(c);
      if (benign < 0)
        throw ValueError("benign label '" + cfg.benign_label + "' does not occur in the data");
      for (auto& ds : data.domains)
        for (int& y : ds.labels) y = y == benign ? 0 : 1;
      data.class_names = {cfg.benign_label, "attack"};
    }
    std::vector<std::string> missing;
    for (const auto& ds : data.domains)
      if (!cfg.has_role(ds.name)) missing.push_back(ds.name);
    if (!missing.empty()) {
      std::string msg = "domains without a role in [roles]:";
      for (const auto& m : missing) msg += " " + m;
      throw ValueError(msg);
    }
  }
  for (auto& ds : data.domains) ds.role = cfg.role_of(ds.name);
  for (const auto* names : {&cfg.source_domains, &cfg.cross_domains, &cfg.ood_domains}) {
    for (const auto& name : *names) {
      const bool found = std::any_of(data.domains.begin(), data.domains.end(),
                                     [&](const DomainDataset& ds) { return ds.name == name; });
      if (!found) throw ValueError("domain '" + name + "' from [roles] is not in the data");
    }
  }
  const std::size_t d = data.domains.front().features.cols();
  if (cfg.topology.front() != d) {
    throw ShapeError("model.topology starts with " + std::to_string(cfg.topology.front()) +
                     " but the data has " + std::to_string(d) + " features");
  }
  return data;
}

ExperimentSplit split_experiment_data(const ExperimentData& data, const ExperimentConfig& cfg) {
  ExperimentSplit split;
  std::vector<DomainDataset> test_source, test_cross, test_ood;
  for (std::size_t i = 0; i < data.domains.size(); ++i) {
    const auto& ds = data.domains[i];
    if (ds.role == Role::ood) {
      test_ood.push_back(ds);
      continue;
    }
    auto [train, test] = split_dataset(ds, cfg.test_fraction, cfg.split_seed * 1000003ULL + i);
    (ds.role == Role::source ? split.train_source : split.train_cross).push_back(std::move(train));
    if (test.rows() > 0) (ds.role == Role::source ? test_source : test_cross).push_back(test);
  }
  for (auto* group : {&test_source, &test_cross, &test_ood})
    for (auto& ds : *group) split.test.push_back(std::move(ds));
  return split;
}

std::vector<RunSpec> expand_grid(const ExperimentConfig& cfg) {
  std::vector<RunSpec> runs;
  for (auto kind : cfg.kinds) {
    for (double fraction : cfg.fractions) {
      for (auto seed : cfg.seeds) {
        for (double bw : cfg.bandwidths) {
          RunSpec r{kind, fraction, seed, bw, {}};
          char buf[32];
          std::snprintf(buf, sizeof buf, "_f%02lld_s",
                        static_cast<long long>(std::llround(fraction * 100.0)));
          r.name = to_string(kind) + buf + std::to_string(seed);
          if (cfg.bandwidths.size() > 1) r.name += "_bw" + text::format_double(bw);
          runs.push_back(std::move(r));
        }
      }
    }
  }
  return runs;
}

TrainConfig run_train_config(const ExperimentConfig& cfg, const RunSpec& run) {
  TrainConfig tc = cfg.train;
  tc.objective = cfg.objective;
  tc.objective.kind = run.kind;
  tc.objective.kernel.bandwidth = run.bandwidth;
  tc.cross_domain_fraction = run.fraction;
  tc.seed = run.seed;
  return tc;
}

ExperimentConfig run_config(const ExperimentConfig& cfg, const RunSpec& run) {
  ExperimentConfig out = cfg;
  out.kinds = {run.kind};
  out.fractions = {run.fraction};
  out.seeds = {run.seed};
  out.bandwidths = {run.bandwidth};
  out.train = run_train_config(cfg, run);
  out.objective = out.train.objective;
  return out;
}

RunOutput execute_run(const ExperimentConfig& cfg, const ExperimentData& data,
                      const ExperimentSplit& split, const RunSpec& run) {
  const TrainConfig tc = run_train_config(cfg, run);
  tc.validate();
  TrainingPool pool =
      build_training_pool(split.train_source, split.train_cross, run.fraction, run.seed);
  const Standardizer st = fit_standardizer(pool.features);
  pool.features = st.apply(pool.features);

  const auto layers = encoder_topology(cfg.topology, cfg.hidden_activation);
  MlpModel model = init_model(layers, data.class_names.size(), run.seed);

  RunOutput out;
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult trained = train(pool, std::move(model), tc);
  out.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.trace = std::move(trained.trace);

  out.checkpoint.model = std::move(trained.model);
  out.checkpoint.class_names = data.class_names;
  out.checkpoint.standardizer = st;
  out.checkpoint.meta = echo_pairs(cfg, run);

  std::vector<DomainDataset> tests;
  for (const auto& ds : split.test) tests.push_back(st.apply(ds));
  const auto e0 = std::chrono::steady_clock::now();
  if (!tests.empty()) {
    out.report = evaluate(out.checkpoint.model, tests,
                          {tc.objective.sigma_input(), tc.objective.sigma_latent(),
                           tc.objective.kernel.alpha, tc.batch_size},
                          data.class_names);
  }
  out.report.config_echo = out.checkpoint.meta;
  out.report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
  return out;
}

void write_run(const RunOutput& out, const ExperimentConfig& cfg, const RunSpec& run,
               const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);
  save_checkpoint(out.checkpoint, run_dir / "model.ckpt");
  text::write_file(run_dir / "trace.jsonl", out.trace.to_jsonl());
  text::write_file(run_dir / "config_echo.ini", config_to_text(run_config(cfg, run)));
  text::write_file(run_dir / "timing.txt",
                   "train_seconds = " + text::format_double(out.train_seconds) +
                       "\neval_seconds = " + text::format_double(out.report.runtime_seconds) +
                       "\n");
  write_report(out.report, run_dir / "report");
}

std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_dir) {
  const ExperimentData data = load_experiment_data(cfg);
  const ExperimentSplit split = split_experiment_data(data, cfg);
  std::vector<RunOutput> outputs;
  std::string summary =
      "run,objective,fraction,seed,bandwidth,source_accuracy,cross_accuracy,ood_accuracy,"
      "mean_mi_bits,final_total_loss\n";
  for (const auto& run : expand_grid(cfg)) {
    RunOutput out = execute_run(cfg, data, split, run);
    write_run(out, cfg, run, out_dir / run.name);
    auto acc = [&](Role r) {
      const RoleAccuracy* ra = out.report.role(r);
      return ra ? text::format_double(ra->accuracy) : std::string();
    };
    summary += run.name + "," + to_string(run.kind) + "," + text::format_double(run.fraction) +
               "," + std::to_string(run.seed) + "," + text::format_double(run.bandwidth) + "," +
               acc(Role::source) + "," + acc(Role::cross) + "," + acc(Role::ood) + "," +
               text::format_double(out.report.mean_mi_bits) + "," +
               (out.trace.records.empty() ? std::string()
                                          : text::format_double(out.trace.records.back().total)) +
               "\n";
    outputs.push_back(std::move(out));
  }
  text::write_file(out_dir / "grid_summary.csv", summary);
  return outputs;
}

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const ExperimentConfig& cfg) {
  const auto tests = standardized_tests(ckpt, cfg);
  if (tests.empty()) throw ValueError("no test data: set data.test_fraction or add OOD domains");
  const MiSettings mi{meta_real(ckpt, "bandwidth_input"), meta_real(ckpt, "bandwidth_latent"),
                      meta_real(ckpt, "alpha"),
                      static_cast<std::size_t>(meta_real(ckpt, "batch_size"))};
  EvalReport report = evaluate(ckpt.model, tests, mi, ckpt.class_names);
  report.config_echo = ckpt.meta;
  return report;
}

void write_eval_outputs(const EvalReport& report, const Checkpoint& ckpt,
                        const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  write_report(report, dir);
  const auto tests = standardized_tests(ckpt, cfg);
  text::write_file(dir / "latents.csv", export_latents(ckpt.model, tests));
  for (const auto& ds : tests) {
    if (ds.rows() < 2) continue;
    text::write_file(dir / ("correlation_" + ds.name + ".csv"),
                     correlation_csv(correlation_matrix(ds), ds.feature_names));
  }
}

}  // namespace mired
