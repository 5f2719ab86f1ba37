#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "fusionette/embedding_store.hpp"
#include "fusionette/metrics.hpp"
#include "fusionette/model.hpp"
#include "fusionette/variant.hpp"

namespace fusionette {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  std::size_t runs = 3;
  /// Also evaluate train-split accuracy after every epoch (one extra
  /// forward pass over the training data).
  bool track_train_accuracy = false;

  /// Throws InvalidArgument.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_accuracy;
  std::vector<double> train_accuracy;  ///< only with track_train_accuracy
  std::size_t best_epoch = 0;          ///< 1-based; 0 = no epoch improved
  bool stopped_early = false;

  std::size_t epochs() const { return val_loss.size(); }
};

nlohmann::json to_json(const TrainHistory& h);

/// Patience-based stopping on a strictly decreasing validation loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records one epoch. Returns true when it set a new best.
  bool update(double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }
  std::size_t epochs() const { return epoch_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct LossAndAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and accuracy over a split, no gradient recording.
LossAndAccuracy loss_and_accuracy(const Model& model, const DatasetSplit& split,
                                  std::size_t batch_size = 256);

struct TrainResult {
  Model model;
  TrainHistory history;
};

/// Mini-batch SGD with per-epoch seeded shuffling (last short batch kept),
/// early stopping on validation loss, and restoration of the best epoch's
/// parameters.
///
/// Throws TrainingError for empty splits or labels outside the spec's class
/// count, DimensionError when the records' widths do not match the spec.
TrainResult train(const VariantSpec& spec, const TrainConfig& cfg,
                  const DatasetSplit& train_split, const DatasetSplit& val_split);

/// Throws TrainingError for an empty split.
MetricsReport evaluate(const Model& model, const DatasetSplit& split);

struct RunResult {
  std::uint64_t seed = 0;
  Model model;
  TrainHistory history;
  MetricsReport test;
};

struct MultiRunReport {
  std::vector<RunResult> runs;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::vector<double> per_class_f1;
};

/// cfg.runs independent runs with seeds cfg.seed + i, each scored on `test`.
/// Runs may execute on up to `workers` threads; results are always reported
/// in run order.
MultiRunReport multi_run(const VariantSpec& spec, const TrainConfig& cfg,
                         const DatasetSplit& train_split, const DatasetSplit& val_split,
                         const DatasetSplit& test_split, std::size_t workers = 1);

/// As multi_run with an explicit seed per run.
MultiRunReport multi_run_with_seeds(const VariantSpec& spec, const TrainConfig& cfg,
                                    const DatasetSplit& train_split,
                                    const DatasetSplit& val_split,
                                    const DatasetSplit& test_split,
                                    std::span<const std::uint64_t> seeds,
                                    std::size_t workers = 1);

}  // namespace fusionette
