#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fusionette/embedding_store.hpp"

namespace fusionette {

/// Synthetic two-class embedding datasets with known structure.
///
///  separable: label = [f_i . u > 0]; solvable from the image side alone.
///  xor:       label = [f_i . u > 0] xor [f_t . v > 0]; neither modality alone
///             carries information about the label.
///  noise:     labels drawn independently of the embeddings.
///
/// Embeddings are Gaussian with standard deviation `scale` in every direction
/// except along u (image) and v (text), where it is `signal_std`. The labels
/// only look at the sign of the projection onto u and v, so the single-modality
/// independence of xor holds for any signal_std. Values are rounded to f32 so
/// the in-memory split equals what the MMEB file stores. u and v are random
/// unit vectors drawn first from the same seeded stream.
enum class SyntheticKind { Separable, Xor, Noise };

std::string_view synthetic_kind_name(SyntheticKind k);
/// Throws InvalidArgument.
SyntheticKind parse_synthetic_kind(std::string_view name);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

struct SyntheticOptions {
  SyntheticKind kind = SyntheticKind::Xor;
  SplitSizes sizes;
  std::size_t dim_image = 512;
  std::size_t dim_text = 512;
  std::uint64_t seed = 0;
  double scale = 1.0;
  double signal_std = 16.0;
};

struct SyntheticDataset {
  DatasetSplit train;
  DatasetSplit validation;
  DatasetSplit test;
  std::vector<double> u;  ///< image-side direction
  std::vector<double> v;  ///< text-side direction

  const DatasetSplit& operator[](SplitName s) const;
};

/// Throws InvalidArgument for zero sizes or non-positive scale / signal_std.
SyntheticDataset gen_synthetic(const SyntheticOptions& options);

}  // namespace fusionette
