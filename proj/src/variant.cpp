#include "fusionette/variant.hpp"

#include "fusionette/error.hpp"

namespace fusionette {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::ImageOnly: return "image_only";
    case Variant::TextOnly: return "text_only";
    case Variant::CrossAttention: return "cross_attention";
    case Variant::GuidedCA: return "guided_ca";
    case Variant::GuidedCASelfAttn: return "guided_ca_self_attn";
    case Variant::CrossDiffAttn: return "cross_diff_attn";
    case Variant::GuidedCADiffAttn: return "guided_ca_diff_attn";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (auto v : kAllVariants) {
    if (variant_name(v) == name) return v;
  }
  throw UnknownVariantError("unknown variant '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) {
  return a == Activation::ReLU ? "relu" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

bool VariantSpec::uses_guided() const {
  return variant == Variant::GuidedCA || variant == Variant::GuidedCASelfAttn ||
         variant == Variant::GuidedCADiffAttn;
}

bool VariantSpec::uses_self_attn() const {
  return variant == Variant::GuidedCASelfAttn || variant == Variant::GuidedCADiffAttn;
}

bool VariantSpec::uses_cross_attn() const {
  return variant == Variant::CrossAttention || variant == Variant::CrossDiffAttn;
}

bool VariantSpec::uses_diff_attn() const {
  return variant == Variant::CrossDiffAttn || variant == Variant::GuidedCADiffAttn;
}

std::size_t VariantSpec::fused_width() const {
  switch (variant) {
    case Variant::ImageOnly: return dim_image;
    case Variant::TextOnly: return dim_text;
    case Variant::CrossAttention:
    case Variant::CrossDiffAttn: return dim_image + dim_text;
    default: return 2 * hidden;
  }
}

std::size_t VariantSpec::diff_d_model() const {
  return n_tok_fused == 0 ? 0 : fused_width() / n_tok_fused;
}

std::size_t VariantSpec::head_width() const {
  // DiffAttn keeps the token width (2d == d_model), so the head sees the
  // fused width either way.
  return fused_width();
}

void VariantSpec::validate() const {
  if (dim_image == 0 || dim_text == 0 || hidden == 0 || num_classes == 0 ||
      n_tok == 0 || n_tok_fused == 0) {
    throw InvalidArgument("variant spec: all dimensions must be positive");
  }
  if (num_classes > 65535) {
    throw InvalidArgument("variant spec: too many classes");
  }
  if (uses_self_attn() || uses_cross_attn()) {
    if (dim_image % n_tok != 0 || dim_text % n_tok != 0) {
      throw InvalidArgument("variant spec: n_tok = " + std::to_string(n_tok) +
                            " must divide both embedding widths (" +
                            std::to_string(dim_image) + ", " +
                            std::to_string(dim_text) + ")");
    }
  }
  if (uses_cross_attn() && dim_image != dim_text) {
    throw DimensionError("variant spec: cross attention needs equal token widths, got " +
                         std::to_string(dim_image / n_tok) + " and " +
                         std::to_string(dim_text / n_tok));
  }
  if (uses_diff_attn()) {
    if (fused_width() % n_tok_fused != 0) {
      throw InvalidArgument("variant spec: n_tok_fused = " + std::to_string(n_tok_fused) +
                            " must divide the fused width " +
                            std::to_string(fused_width()));
    }
    if (diff_d_model() % 2 != 0) {
      throw InvalidArgument("variant spec: DiffAttn token width " +
                            std::to_string(diff_d_model()) + " must be even");
    }
  }
}

nlohmann::json to_json(const VariantSpec& spec) {
  return {
      {"variant", variant_name(spec.variant)},
      {"dim_image", spec.dim_image},
      {"dim_text", spec.dim_text},
      {"n_tok", spec.n_tok},
      {"n_tok_fused", spec.n_tok_fused},
      {"hidden", spec.hidden},
      {"num_classes", spec.num_classes},
      {"activation", activation_name(spec.activation)},
      {"lambda_init", spec.lambda_init},
  };
}

VariantSpec variant_spec_from_json(const nlohmann::json& j) {
  try {
    VariantSpec s;
    s.variant = parse_variant(j.at("variant").get<std::string>());
    s.dim_image = j.at("dim_image").get<std::size_t>();
    s.dim_text = j.at("dim_text").get<std::size_t>();
    s.n_tok = j.at("n_tok").get<std::size_t>();
    s.n_tok_fused = j.at("n_tok_fused").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::size_t>();
    s.num_classes = j.at("num_classes").get<std::size_t>();
    s.activation = parse_activation(j.at("activation").get<std::string>());
    s.lambda_init = j.at("lambda_init").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("variant spec json: ") + e.what());
  }
}

}  // namespace fusionette
