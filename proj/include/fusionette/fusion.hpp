#pragma once

#include <cstddef>
#include <cstdint>

#include "fusionette/attention.hpp"
#include "fusionette/embedding_store.hpp"
#include "fusionette/model.hpp"
#include "fusionette/tensor.hpp"
#include "fusionette/variant.hpp"

namespace fusionette {

/// Projection and sigmoid gate of one modality.
struct GateOutput {
  Tensor z;      ///< F(f W + b)
  Tensor alpha;  ///< sigmoid(f W' + b'), every component in (0, 1)
};

/// f: [D] or [B, D]; weights [D, h], biases [h].
GateOutput guided_gate(const Tensor& f, const Tensor& proj_w, const Tensor& proj_b,
                       const Tensor& gate_w, const Tensor& gate_b,
                       Activation activation = Activation::ReLU);

/// The two projections and two gates of guided cross-attention. Each
/// modality has its own gate weights and bias.
struct GuidedCAParams {
  Tensor w_i, b_i, w_i_gate, b_i_gate;
  Tensor w_t, b_t, w_t_gate, b_t_gate;
  std::size_t hidden = 0;
};

/// Intermediate values of one forward pass, filled on request.
struct FusionActivations {
  Tensor z_i, z_t;
  Tensor alpha_i, alpha_t;
  Tensor z;        ///< fused vector entering DiffAttn or the head
  Tensor z_prime;  ///< DiffAttn output (flattened), when the variant has one
};

/// concat(alpha_t * z_i, alpha_i * z_t): the text gate scales the image
/// projection and vice versa. With `with_self_attn` each modality first goes
/// through tokenize -> self_attn -> flatten with n_tok tokens.
Tensor guided_ca_fuse(const Tensor& f_i, const Tensor& f_t, const GuidedCAParams& p,
                      bool with_self_attn, std::size_t n_tok,
                      Activation activation = Activation::ReLU,
                      FusionActivations* trace = nullptr);

/// concat(flatten(cross_attn(I, T)), flatten(cross_attn(T, I))) over n_tok
/// tokens per modality. Parameter-free.
Tensor cross_attention_fuse(const Tensor& f_i, const Tensor& f_t, std::size_t n_tok);

/// Views into a model's parameter map.
GuidedCAParams guided_params(const Model& model);
DiffAttnParams diff_params(const Model& model);

/// Validates the spec and returns an initialized model. Throws
/// UnknownVariantError / InvalidArgument / DimensionError.
Model build_variant(const VariantSpec& spec, std::uint64_t seed);

/// Logits for a batch: f_i [B, D_I], f_t [B, D_T] -> [B, num_classes].
Tensor forward_batch(const Model& model, const Tensor& f_i, const Tensor& f_t,
                     FusionActivations* trace = nullptr);

/// Logits [num_classes] for one record. Throws DimensionError when the
/// record's widths differ from the model's.
Tensor model_forward(const Model& model, const EmbeddingRecord& record);

/// Stacks the given records' embeddings into [B, D] tensors.
std::pair<Tensor, Tensor> stack_records(std::span<const EmbeddingRecord> records,
                                        std::span<const std::size_t> indices);

}  // namespace fusionette
