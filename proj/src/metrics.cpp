#include "fusionette/metrics.hpp"

#include "fusionette/error.hpp"

namespace fusionette {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : c_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw InvalidArgument("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t prediction) {
  if (truth >= c_ || prediction >= c_) {
    throw InvalidArgument("confusion matrix: pair (" + std::to_string(truth) + ", " +
                          std::to_string(prediction) + ") outside " +
                          std::to_string(c_) + " classes");
  }
  ++counts_[truth * c_ + prediction];
  ++total_;
}

std::uint64_t ConfusionMatrix::support(std::size_t k) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < c_; ++j) s += at(k, j);
  return s;
}

std::uint64_t ConfusionMatrix::predicted(std::size_t k) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < c_; ++i) s += at(i, k);
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t k = 0; k < c_; ++k) s += at(k, k);
  return s;
}

double ConfusionMatrix::f1(std::size_t k) const {
  // F1 = 2TP / (2TP + FP + FN), equal to 2PR/(P+R) whenever that is defined.
  const double tp = static_cast<double>(at(k, k));
  const double denom = static_cast<double>(support(k) + predicted(k));
  return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

std::vector<std::vector<std::uint64_t>> ConfusionMatrix::rows() const {
  std::vector<std::vector<std::uint64_t>> out(c_, std::vector<std::uint64_t>(c_));
  for (std::size_t i = 0; i < c_; ++i)
    for (std::size_t j = 0; j < c_; ++j) out[i][j] = at(i, j);
  return out;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InvalidArgument("metrics over zero samples");
  MetricsReport r;
  const std::size_t c = cm.num_classes();
  const double n = static_cast<double>(cm.total());
  r.n_samples = cm.total();
  r.confusion = cm.rows();
  r.accuracy = static_cast<double>(cm.trace()) / n;
  r.per_class_f1.resize(c);
  double macro = 0.0, weighted = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const double f = cm.f1(k);
    r.per_class_f1[k] = f;
    macro += f;
    weighted += static_cast<double>(cm.support(k)) / n * f;
  }
  r.macro_f1 = macro / static_cast<double>(c);
  r.weighted_f1 = weighted;
  return r;
}

MetricsReport compute_metrics(std::span<const std::size_t> labels,
                              std::span<const std::size_t> predictions,
                              std::size_t num_classes) {
  if (labels.size() != predictions.size()) {
    throw InvalidArgument("compute_metrics: " + std::to_string(labels.size()) +
                          " labels vs " + std::to_string(predictions.size()) +
                          " predictions");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) cm.add(labels[i], predictions[i]);
  return metrics_from_confusion(cm);
}

nlohmann::json to_json(const MetricsReport& r) {
  return {
      {"accuracy", r.accuracy},       {"macro_f1", r.macro_f1},
      {"weighted_f1", r.weighted_f1}, {"confusion", r.confusion},
      {"per_class_f1", r.per_class_f1}, {"n_samples", r.n_samples},
  };
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
    r.per_class_f1 = j.at("per_class_f1").get<std::vector<double>>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("metrics json: ") + e.what());
  }
}

}  // namespace fusionette
