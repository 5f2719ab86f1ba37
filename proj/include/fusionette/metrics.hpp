#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace fusionette {

/// counts[truth][prediction].
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  /// Throws InvalidArgument for an index outside the label space.
  void add(std::size_t truth, std::size_t prediction);

  std::size_t num_classes() const { return c_; }
  std::uint64_t at(std::size_t truth, std::size_t prediction) const {
    return counts_[truth * c_ + prediction];
  }
  std::uint64_t total() const { return total_; }
  std::uint64_t support(std::size_t k) const;    ///< row sum
  std::uint64_t predicted(std::size_t k) const;  ///< column sum
  std::uint64_t trace() const;

  /// 2PR / (P + R); 0 when undefined (no true and no predicted samples, or
  /// no true positives).
  double f1(std::size_t k) const;

  std::vector<std::vector<std::uint64_t>> rows() const;

 private:
  std::size_t c_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;     ///< unweighted mean over the full label space
  double weighted_f1 = 0.0;  ///< support-weighted mean
  std::vector<std::vector<std::uint64_t>> confusion;
  std::vector<double> per_class_f1;
  std::size_t n_samples = 0;
};

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);

/// Throws InvalidArgument for empty input, length mismatch, or out-of-range
/// labels.
MetricsReport compute_metrics(std::span<const std::size_t> labels,
                              std::span<const std::size_t> predictions,
                              std::size_t num_classes);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_report_from_json(const nlohmann::json& j);

}  // namespace fusionette
