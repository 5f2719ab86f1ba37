#pragma once

#include <cstddef>
#include <random>

#include "fusionette/tensor.hpp"

namespace fusionette {

/// A pooled embedding reshaped into a short token sequence.
///
/// `tokens` is [n_tok, D / n_tok] for a single vector or
/// [B, n_tok, D / n_tok] for a batch of row vectors.
struct TokenView {
  Tensor tokens;
  std::size_t origin_dim = 0;  ///< D, the flattened width of one sample.
};

/// Row-major reshape of v ([D] or [B, D]) into n_tok tokens.
/// Throws InvalidArgument when n_tok does not divide D.
TokenView reshape_tokens(const Tensor& v, std::size_t n_tok);

/// Inverse of reshape_tokens: [n_tok, w] -> [D], [B, n_tok, w] -> [B, D].
Tensor flatten_tokens(const Tensor& tokens);

/// softmax(V V^T / sqrt(d)) V with d the token width. No learned projections.
/// V: [n, d] or [B, n, d].
Tensor self_attn(const Tensor& v);

/// softmax(A B^T / sqrt(d)) B; A: [n, d], B: [m, d] (optionally batched).
Tensor cross_attn(const Tensor& a, const Tensor& b);

/// Learnable weights of single-head differential attention.
struct DiffAttnParams {
  Tensor w_q;     ///< [d_model, 2d]
  Tensor w_k;     ///< [d_model, 2d]
  Tensor w_v;     ///< [d_model, 2d]
  Tensor lambda;  ///< scalar
  std::size_t d = 0;
  std::size_t d_model = 0;

  /// Checks the shape invariants; throws DimensionError.
  void validate() const;
};

/// Uniform(-1/sqrt(d_model), 1/sqrt(d_model)) projections, lambda = lambda_init.
DiffAttnParams init_diff_attn(std::size_t d_model, std::size_t d, double lambda_init,
                              std::mt19937_64& rng);

/// (softmax(Q1 K1^T / sqrt(d)) - lambda softmax(Q2 K2^T / sqrt(d))) V.
///
/// X: [N, d_model] or [B, N, d_model]. Q = X W^Q is split along its last axis
/// with the first d columns feeding the first map. Output: [.., N, 2d].
Tensor diff_attn(const Tensor& x, const DiffAttnParams& p);

}  // namespace fusionette
