#include "mired/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mired/error.hpp"

namespace mired {

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (batch_size < 2) problems.emplace_back("batch_size must be >= 2");
  if (!(lr_encoder > 0.0) || !std::isfinite(lr_encoder))
    problems.emplace_back("lr_encoder must be > 0");
  if (!(lr_decoder > 0.0) || !std::isfinite(lr_decoder))
    problems.emplace_back("lr_decoder must be > 0");
  if (!(cross_domain_fraction >= 0.0 && cross_domain_fraction <= 0.5))
    problems.emplace_back("cross_domain_fraction must be in [0, 0.5]");
  if (log_every < 1) problems.emplace_back("log_every must be >= 1");
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValueError(msg);
  }
  objective.validate();
}

std::string TrainTrace::to_jsonl(bool with_time) const {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["batch"] = r.batch;
    j["total"] = r.total;
    j["ce"] = r.ce;
    j["rec"] = r.rec;
    j["reg"] = r.reg;
    if (with_time) j["wall_seconds"] = r.wall_seconds;
    out += j.dump() + "\n";
  }
  return out;
}

std::size_t cross_rows_per_domain(std::size_t total_source, std::size_t n_cross,
                                  double fraction) {
  if (n_cross == 0) return 0;
  return static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(total_source) / static_cast<double>(n_cross)));
}

TrainingPool build_training_pool(std::span<const DomainDataset> source,
                                 std::span<const DomainDataset> cross, double fraction,
                                 std::uint64_t seed) {
  if (source.empty()) throw ValueError("build_training_pool: no source domains");
  if (!(fraction >= 0.0 && fraction <= 0.5))
    throw ValueError("build_training_pool: fraction must be in [0, 0.5]");
  const std::size_t d = source.front().features.cols();
  std::size_t total_source = 0;
  for (const auto& ds : source) {
    ds.validate();
    if (ds.features.cols() != d)
      throw ShapeError("build_training_pool: domain '" + ds.name + "' has a different width");
    total_source += ds.rows();
  }
  const std::size_t per_cross = cross_rows_per_domain(total_source, cross.size(), fraction);
  for (const auto& ds : cross) {
    ds.validate();
    if (ds.features.cols() != d)
      throw ShapeError("build_training_pool: domain '" + ds.name + "' has a different width");
    if (per_cross > ds.rows()) {
      throw ValueError("build_training_pool: cross domain '" + ds.name + "' has " +
                       std::to_string(ds.rows()) + " rows, " + std::to_string(per_cross) +
                       " requested");
    }
  }

  TrainingPool pool;
  const std::size_t total = total_source + per_cross * cross.size();
  pool.features = DenseMatrix(total, d);
  std::size_t out_row = 0;
  auto append = [&](const DomainDataset& ds, std::span<const std::size_t> rows, Role role) {
    const std::size_t dom = pool.domain_names.size();
    pool.domain_names.push_back(ds.name);
    for (auto r : rows) {
      std::copy(ds.features.row(r).begin(), ds.features.row(r).end(),
                pool.features.row(out_row).begin());
      pool.labels.push_back(ds.labels[r]);
      pool.domain.push_back(dom);
      pool.role.push_back(role);
      ++out_row;
    }
  };
  for (const auto& ds : source) {
    std::vector<std::size_t> all(ds.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    append(ds, all, Role::source);
  }
  std::mt19937_64 rng(seed);
  for (const auto& ds : cross) {
    std::vector<std::size_t> idx(ds.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(per_cross);
    std::sort(idx.begin(), idx.end());
    append(ds, idx, Role::cross);
  }
  return pool;
}

std::vector<int> partition_groups(const TrainingPool& pool) {
  std::vector<int> groups(pool.rows(), 0);
  const bool has_cross =
      std::any_of(pool.role.begin(), pool.role.end(), [](Role r) { return r == Role::cross; });
  for (std::size_t i = 0; i < pool.rows(); ++i) {
    groups[i] = has_cross ? (pool.role[i] == Role::cross ? 1 : 0) : (pool.domain[i] == 0 ? 0 : 1);
  }
  return groups;
}

std::vector<std::vector<std::size_t>> epoch_batches(const TrainingPool& pool,
                                                    const TrainConfig& cfg,
                                                    std::span<const int> groups,
                                                    std::mt19937_64& rng) {
  const std::size_t n = pool.rows();
  const std::size_t l = cfg.batch_size;
  std::vector<std::vector<std::size_t>> batches;

  if (!cfg.objective.needs_partition()) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    if (n < l) {
      // The whole pool is one batch when it is smaller than l.
      if (n >= 2) batches.push_back(order);
      return batches;
    }
    for (std::size_t start = 0; start + l <= n; start += l)
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(start + l));
    return batches;
  }

  std::vector<std::size_t> g0;
  std::vector<std::size_t> g1;
  for (std::size_t i = 0; i < n; ++i) (groups[i] == 0 ? g0 : g1).push_back(i);
  if (g0.size() < 2 || g1.size() < 2) {
    throw ValueError(to_string(cfg.objective.kind) +
                     " needs at least 2 rows in each of its two groups (source/cross or "
                     "first domain/rest), got " +
                     std::to_string(g0.size()) + " and " + std::to_string(g1.size()));
  }
  std::shuffle(g0.begin(), g0.end(), rng);
  std::shuffle(g1.begin(), g1.end(), rng);
  const std::size_t batch = std::min(l, n);
  if (batch < 4) throw ValueError(to_string(cfg.objective.kind) + " needs batches of at least 4 rows");
  // Group sizes within a batch follow the pool proportions, at least 2 each.
  const auto k1 = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(batch) *
                                            static_cast<double>(g1.size()) /
                                            static_cast<double>(n))),
      2, batch - 2);
  const std::size_t k0 = batch - k1;
  const std::size_t n_batches = std::min(g0.size() / k0, g1.size() / k1);
  for (std::size_t b = 0; b < n_batches; ++b) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < k0; ++i) rows.push_back(g0[b * k0 + i]);
    for (std::size_t i = 0; i < k1; ++i) rows.push_back(g1[b * k1 + i]);
    batches.push_back(std::move(rows));
  }
  return batches;
}

TrainResult train(const TrainingPool& pool, MlpModel model, const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  if (pool.rows() == 0) throw ValueError("train: empty training pool");
  if (pool.features.cols() != model.input_dim()) {
    throw ShapeError("train: pool has " + std::to_string(pool.features.cols()) +
                     " features, model expects " + std::to_string(model.input_dim()));
  }
  for (int y : pool.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.n_classes())
      throw ValueError("train: label " + std::to_string(y) + " outside the model's classes");
  }

  TrainResult result{std::move(model), {}};
  const std::vector<int> groups = partition_groups(pool);
  std::mt19937_64 rng(cfg.seed);
  const auto start = std::chrono::steady_clock::now();
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = epoch_batches(pool, cfg, groups, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& rows = batches[b];
      const DenseMatrix x = pool.features.select_rows(rows);
      std::vector<int> y;
      y.reserve(rows.size());
      BatchPartition part;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        y.push_back(pool.labels[rows[i]]);
        (groups[rows[i]] == 0 ? part.first : part.second).push_back(i);
      }
      GradientBundle g = backward(result.model, x, y, cfg.objective, part);
      const LossBreakdown& loss = g.loss;
      if (!std::isfinite(loss.total) || !g.all_finite()) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " batch " << b << ": total=" << loss.total
            << " ce=" << loss.ce << " rec=" << loss.rec << " reg=" << loss.reg;
        throw NumericalError(msg.str());
      }
      sgd_step(result.model, g, cfg.lr_encoder, cfg.lr_decoder);
      if (step % cfg.log_every == 0) {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.trace.records.push_back({epoch, b, loss.total, loss.ce, loss.rec, loss.reg, wall});
      }
      ++step;
    }
  }
  return result;
}

}  // namespace mired
