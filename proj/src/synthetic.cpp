#include "fusionette/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "fusionette/error.hpp"

namespace fusionette {

std::string_view synthetic_kind_name(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::Separable: return "separable";
    case SyntheticKind::Xor: return "xor";
    case SyntheticKind::Noise: return "noise";
  }
  return "?";
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "separable") return SyntheticKind::Separable;
  if (name == "xor") return SyntheticKind::Xor;
  if (name == "noise") return SyntheticKind::Noise;
  throw InvalidArgument("unknown synthetic kind '" + std::string(name) + "'");
}

const DatasetSplit& SyntheticDataset::operator[](SplitName s) const {
  switch (s) {
    case SplitName::Train: return train;
    case SplitName::Validation: return validation;
    case SplitName::Test: return test;
  }
  return train;
}

namespace {

std::vector<double> unit_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// N(0, scale^2 I) with the component along `dir` rescaled to signal_std.
std::vector<double> f32_gaussian(const std::vector<double>& dir, double scale,
                                 double signal_std, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(dir.size());
  for (auto& x : v) x = normal(rng);
  const double along = dot(v, dir) * (signal_std / scale - 1.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(static_cast<float>(v[i] + along * dir[i]));
  }
  return v;
}

DatasetSplit make_split(const SyntheticOptions& o, SplitName name, std::size_t n,
                        const std::vector<double>& u, const std::vector<double>& v,
                        std::mt19937_64& rng) {
  DatasetSplit split;
  split.task_id = 0;
  split.split = name;
  split.num_classes = 2;
  split.class_names = {"class_0", "class_1"};
  split.dim_image = o.dim_image;
  split.dim_text = o.dim_text;
  split.records.reserve(n);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    EmbeddingRecord rec;
    char id[48];
    std::snprintf(id, sizeof id, "%s-%07zu",
                  std::string(split_name_str(name)).c_str(), i);
    rec.id = id;
    rec.f_i = f32_gaussian(u, o.scale, o.signal_std, rng);
    rec.f_t = f32_gaussian(v, o.scale, o.signal_std, rng);
    const bool image_side = dot(rec.f_i, u) > 0.0;
    const bool text_side = dot(rec.f_t, v) > 0.0;
    switch (o.kind) {
      case SyntheticKind::Separable: rec.label = image_side ? 1 : 0; break;
      case SyntheticKind::Xor: rec.label = (image_side != text_side) ? 1 : 0; break;
      case SyntheticKind::Noise: rec.label = coin(rng) ? 1 : 0; break;
    }
    split.records.push_back(std::move(rec));
  }
  return split;
}

}  // namespace

SyntheticDataset gen_synthetic(const SyntheticOptions& o) {
  if (o.sizes.train == 0 || o.sizes.validation == 0 || o.sizes.test == 0) {
    throw InvalidArgument("gen_synthetic: every split needs at least one record");
  }
  if (o.dim_image == 0 || o.dim_text == 0) {
    throw InvalidArgument("gen_synthetic: embedding widths must be positive");
  }
  if (!(o.scale > 0.0) || !std::isfinite(o.scale) || !(o.signal_std > 0.0) ||
      !std::isfinite(o.signal_std)) {
    throw InvalidArgument("gen_synthetic: scale and signal_std must be positive");
  }
  std::mt19937_64 rng(o.seed);
  SyntheticDataset ds;
  ds.u = unit_vector(o.dim_image, rng);
  ds.v = unit_vector(o.dim_text, rng);
  ds.train = make_split(o, SplitName::Train, o.sizes.train, ds.u, ds.v, rng);
  ds.validation = make_split(o, SplitName::Validation, o.sizes.validation, ds.u, ds.v, rng);
  ds.test = make_split(o, SplitName::Test, o.sizes.test, ds.u, ds.v, rng);
  return ds;
}

}  // namespace fusionette
