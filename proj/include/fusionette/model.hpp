#pragma once

// Model container, initialization, prediction and the model file format.
//
// Model file, little-endian:
//   "FUSN"  version:u16  header:str32 (UTF-8 JSON {"spec": {...}, "seed": n})
//   param_count:u32
//   param_count * { name:str16  rank:u8  extent:u32 * rank  data:f64[numel] }
//   crc32:u32   (over every preceding byte)

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fusionette/embedding_store.hpp"
#include "fusionette/tensor.hpp"
#include "fusionette/variant.hpp"

namespace fusionette {

inline constexpr char kModelMagic[4] = {'F', 'U', 'S', 'N'};
inline constexpr std::uint16_t kModelVersion = 1;

// Parameter names. Guided gating (image/text projections and gates),
// differential attention, classifier head.
namespace param {
inline constexpr const char* kImageProjW = "guided.w_i";
inline constexpr const char* kImageProjB = "guided.b_i";
inline constexpr const char* kImageGateW = "guided.w_i_gate";
inline constexpr const char* kImageGateB = "guided.b_i_gate";
inline constexpr const char* kTextProjW = "guided.w_t";
inline constexpr const char* kTextProjB = "guided.b_t";
inline constexpr const char* kTextGateW = "guided.w_t_gate";
inline constexpr const char* kTextGateB = "guided.b_t_gate";
inline constexpr const char* kDiffWq = "diff.w_q";
inline constexpr const char* kDiffWk = "diff.w_k";
inline constexpr const char* kDiffWv = "diff.w_v";
inline constexpr const char* kDiffLambda = "diff.lambda";
inline constexpr const char* kHeadW = "head.w_fc";
inline constexpr const char* kHeadB = "head.b_fc";
}  // namespace param

struct Model {
  VariantSpec spec;
  std::map<std::string, Tensor> params;
  std::uint64_t seed = 0;

  /// Parameters in name order (the order SGD and serialization use).
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;
  /// Throws InvalidArgument for a name the variant does not use.
  const Tensor& param(const std::string& name) const;

  /// Deep copy with fresh leaf tensors.
  Model clone() const;
  /// Overwrites parameter values from a model of identical layout.
  void assign_values(const Model& other);
};

/// Names and shapes of every parameter a spec needs, in initialization order.
std::vector<std::pair<std::string, Shape>> parameter_layout(const VariantSpec& spec);

/// Seeded initialization: every affine map U(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// for weights and biases, lambda = spec.lambda_init. Same (spec, seed) gives
/// a bitwise-identical model.
Model init_model(const VariantSpec& spec, std::uint64_t seed);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probs;
};

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

Prediction predict(const Model& model, const EmbeddingRecord& record);
/// Batched argmax predictions for many records.
std::vector<std::size_t> predict_labels(const Model& model,
                                        std::span<const EmbeddingRecord> records,
                                        std::size_t batch_size = 256);

std::vector<std::uint8_t> encode_model(const Model& model);
/// Error precedence matches the MMEB reader: magic, version, truncation,
/// checksum, then payload (JSON, parameter names/shapes).
Model decode_model(std::span<const std::uint8_t> bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace fusionette
