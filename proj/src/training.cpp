#include "fusionette/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "fusionette/error.hpp"
#include "fusionette/fusion.hpp"
#include "fusionette/parallel.hpp"

namespace fusionette {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw InvalidArgument("train config: lr must be finite and non-negative");
  }
  if (batch_size == 0) throw InvalidArgument("train config: batch_size must be >= 1");
  if (patience == 0) throw InvalidArgument("train config: patience must be >= 1");
  if (runs == 0) throw InvalidArgument("train config: runs must be >= 1");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"lr", cfg.lr},
          {"batch_size", cfg.batch_size},
          {"max_epochs", cfg.max_epochs},
          {"patience", cfg.patience},
          {"seed", cfg.seed},
          {"runs", cfg.runs}};
}

nlohmann::json to_json(const TrainHistory& h) {
  nlohmann::json j = {{"train_loss", h.train_loss},
                      {"val_loss", h.val_loss},
                      {"val_accuracy", h.val_accuracy},
                      {"best_epoch", h.best_epoch},
                      {"stopped_early", h.stopped_early}};
  if (!h.train_accuracy.empty()) j["train_accuracy"] = h.train_accuracy;
  return j;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  if (val_loss < best_) {  // false for NaN
    best_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

void check_split(const VariantSpec& spec, const DatasetSplit& split) {
  const auto name = std::string(split_name_str(split.split));
  if (split.empty()) throw TrainingError("the " + name + " split is empty");
  if (split.dim_image != spec.dim_image || split.dim_text != spec.dim_text) {
    throw DimensionError("the " + name + " split has widths (" +
                         std::to_string(split.dim_image) + ", " +
                         std::to_string(split.dim_text) + "), variant expects (" +
                         std::to_string(spec.dim_image) + ", " +
                         std::to_string(spec.dim_text) + ")");
  }
  for (const auto& r : split.records) {
    if (r.f_i.size() != spec.dim_image || r.f_t.size() != spec.dim_text) {
      throw DimensionError("record '" + r.id + "' does not match the variant widths");
    }
    if (r.label >= spec.num_classes) {
      throw TrainingError("record '" + r.id + "' has label " + std::to_string(r.label) +
                          " >= num_classes " + std::to_string(spec.num_classes));
    }
  }
}

std::vector<std::vector<double>> snapshot(const Model& m) {
  std::vector<std::vector<double>> out;
  for (const auto& [name, t] : m.params) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

void restore(const Model& m, const std::vector<std::vector<double>>& values) {
  std::size_t i = 0;
  for (const auto& [name, t] : m.params) {
    std::copy(values[i].begin(), values[i].end(), t.mutable_values().begin());
    ++i;
  }
}

// Seeds the shuffling stream apart from parameter initialization.
constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ULL;

}  // namespace

LossAndAccuracy loss_and_accuracy(const Model& model, const DatasetSplit& split,
                                  std::size_t batch_size) {
  if (split.empty()) throw TrainingError("cannot score an empty split");
  NoGradGuard no_grad;
  const std::size_t n = split.size();
  const std::size_t c = model.spec.num_classes;
  double total_loss = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx, labels;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    labels.clear();
    for (auto i : idx) labels.push_back(split.records[i].label);
    auto [fi, ft] = stack_records(split.records, idx);
    const Tensor logits = forward_batch(model, fi, ft);
    total_loss += cross_entropy(logits, labels).item() * static_cast<double>(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (argmax(logits.values().subspan(r * c, c)) == labels[r]) ++correct;
    }
  }
  return {total_loss / static_cast<double>(n),
          static_cast<double>(correct) / static_cast<double>(n)};
}

TrainResult train(const VariantSpec& spec, const TrainConfig& cfg,
                  const DatasetSplit& train_split, const DatasetSplit& val_split) {
  cfg.validate();
  spec.validate();
  check_split(spec, train_split);
  check_split(spec, val_split);

  TrainResult result{build_variant(spec, cfg.seed), {}};
  Model& model = result.model;
  TrainHistory& hist = result.history;
  const auto params = model.parameters();

  std::mt19937_64 shuffler(cfg.seed ^ kShuffleStream);
  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), 0);

  EarlyStopping stopper(cfg.patience);
  auto best = snapshot(model);
  std::vector<std::size_t> labels;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      labels.clear();
      for (auto i : batch) labels.push_back(train_split.records[i].label);
      auto [fi, ft] = stack_records(train_split.records, batch);
      const Tensor loss = cross_entropy(forward_batch(model, fi, ft), labels);
      backward(loss);
      sgd_step(params, cfg.lr);
      epoch_loss += loss.item() * static_cast<double>(batch.size());
    }
    hist.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));

    const auto val = loss_and_accuracy(model, val_split);
    hist.val_loss.push_back(val.loss);
    hist.val_accuracy.push_back(val.accuracy);
    if (cfg.track_train_accuracy) {
      hist.train_accuracy.push_back(loss_and_accuracy(model, train_split).accuracy);
    }

    if (stopper.update(val.loss)) best = snapshot(model);
    if (stopper.should_stop()) {
      hist.stopped_early = true;
      break;
    }
  }
  hist.best_epoch = stopper.best_epoch();
  restore(model, best);
  return result;
}

MetricsReport evaluate(const Model& model, const DatasetSplit& split) {
  if (split.empty()) throw TrainingError("cannot evaluate an empty split");
  const auto preds = predict_labels(model, split.records);
  std::vector<std::size_t> labels;
  labels.reserve(split.size());
  for (const auto& r : split.records) labels.push_back(r.label);
  return compute_metrics(labels, preds, model.spec.num_classes);
}

MultiRunReport multi_run_with_seeds(const VariantSpec& spec, const TrainConfig& cfg,
                                    const DatasetSplit& train_split,
                                    const DatasetSplit& val_split,
                                    const DatasetSplit& test_split,
                                    std::span<const std::uint64_t> seeds,
                                    std::size_t workers) {
  if (seeds.empty()) throw InvalidArgument("multi_run: at least one run is required");
  if (test_split.empty()) throw TrainingError("the test split is empty");
  std::vector<std::optional<RunResult>> slots(seeds.size());
  const auto errors = run_jobs(seeds.size(), workers, [&](std::size_t i) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = seeds[i];
    auto trained = train(spec, run_cfg, train_split, val_split);
    MetricsReport test = evaluate(trained.model, test_split);
    slots[i] = RunResult{seeds[i], std::move(trained.model), std::move(trained.history),
                         std::move(test)};
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MultiRunReport report;
  const double n = static_cast<double>(seeds.size());
  report.per_class_f1.assign(spec.num_classes, 0.0);
  for (auto& slot : slots) {
    const auto& t = slot->test;
    report.accuracy += t.accuracy;
    report.macro_f1 += t.macro_f1;
    report.weighted_f1 += t.weighted_f1;
    for (std::size_t k = 0; k < report.per_class_f1.size(); ++k) {
      report.per_class_f1[k] += t.per_class_f1[k];
    }
    report.runs.push_back(std::move(*slot));
  }
  report.accuracy /= n;
  report.macro_f1 /= n;
  report.weighted_f1 /= n;
  for (auto& f : report.per_class_f1) f /= n;
  return report;
}

MultiRunReport multi_run(const VariantSpec& spec, const TrainConfig& cfg,
                         const DatasetSplit& train_split, const DatasetSplit& val_split,
                         const DatasetSplit& test_split, std::size_t workers) {
  cfg.validate();
  std::vector<std::uint64_t> seeds(cfg.runs);
  for (std::size_t i = 0; i < cfg.runs; ++i) seeds[i] = cfg.seed + i;
  return multi_run_with_seeds(spec, cfg, train_split, val_split, test_split, seeds, workers);
}

}  // namespace fusionette
