#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

namespace fusionette {

/// Fusion pipelines of the ablation grid. The string names are the stable
/// CLI vocabulary.
enum class Variant {
  ImageOnly,
  TextOnly,
  CrossAttention,
  GuidedCA,
  GuidedCASelfAttn,
  CrossDiffAttn,
  GuidedCADiffAttn,
};

inline constexpr std::array<Variant, 7> kAllVariants{
    Variant::ImageOnly,        Variant::TextOnly,      Variant::CrossAttention,
    Variant::GuidedCA,         Variant::GuidedCASelfAttn, Variant::CrossDiffAttn,
    Variant::GuidedCADiffAttn,
};

std::string_view variant_name(Variant v);
/// Throws UnknownVariantError.
Variant parse_variant(std::string_view name);

/// Activation F(.) applied to the guided projections.
enum class Activation { ReLU, Tanh };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct VariantSpec {
  Variant variant = Variant::GuidedCADiffAttn;
  std::size_t dim_image = 512;
  std::size_t dim_text = 512;
  std::size_t n_tok = 8;        ///< tokens per modality for self/cross attention
  std::size_t n_tok_fused = 4;  ///< tokens of the fused vector for DiffAttn
  std::size_t hidden = 256;     ///< h, width of each guided projection
  std::size_t num_classes = 2;
  Activation activation = Activation::ReLU;
  double lambda_init = 0.8;

  /// Throws InvalidArgument / DimensionError if the spec cannot be built.
  void validate() const;

  bool uses_guided() const;
  bool uses_self_attn() const;
  bool uses_cross_attn() const;
  bool uses_diff_attn() const;

  /// Width of the vector entering DiffAttn (or the head when there is none).
  std::size_t fused_width() const;
  /// Token width inside DiffAttn; the per-branch key width d is half of it.
  std::size_t diff_d_model() const;
  std::size_t diff_d() const { return diff_d_model() / 2; }
  /// Input width of the classifier head.
  std::size_t head_width() const;

  friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

nlohmann::json to_json(const VariantSpec& spec);
/// Throws InvalidArgument on missing or malformed fields.
VariantSpec variant_spec_from_json(const nlohmann::json& j);

}  // namespace fusionette
