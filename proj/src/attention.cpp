#include "fusionette/attention.hpp"

#include <cmath>

#include "fusionette/error.hpp"

namespace fusionette {

namespace {

// Projects the last axis of x ([N, dm] or [B, N, dm]) through w ([dm, k]).
Tensor project_last(const Tensor& x, const Tensor& w) {
  if (x.rank() == 2) return matmul(x, w);
  const std::size_t b = x.dim(0), n = x.dim(1);
  Tensor flat = reshape(x, {b * n, x.dim(2)});
  return reshape(matmul(flat, w), {b, n, w.dim(1)});
}

Tensor attention_map(const Tensor& q, const Tensor& k) {
  const double d = static_cast<double>(q.shape().back());
  return softmax_rows(scale(bmm_nt(q, k), 1.0 / std::sqrt(d)));
}

}  // namespace

TokenView reshape_tokens(const Tensor& v, std::size_t n_tok) {
  if (v.rank() != 1 && v.rank() != 2) {
    throw DimensionError("reshape_tokens: expected [D] or [B, D], got " +
                         shape_to_string(v.shape()));
  }
  const std::size_t dim = v.shape().back();
  if (n_tok == 0 || dim % n_tok != 0) {
    throw InvalidArgument("reshape_tokens: " + std::to_string(n_tok) +
                          " tokens do not divide width " + std::to_string(dim));
  }
  Shape shape = v.rank() == 1 ? Shape{n_tok, dim / n_tok}
                              : Shape{v.dim(0), n_tok, dim / n_tok};
  return {reshape(v, std::move(shape)), dim};
}

Tensor flatten_tokens(const Tensor& tokens) {
  if (tokens.rank() == 2) return reshape(tokens, {tokens.numel()});
  if (tokens.rank() == 3) {
    return reshape(tokens, {tokens.dim(0), tokens.dim(1) * tokens.dim(2)});
  }
  throw DimensionError("flatten_tokens: expected rank 2 or 3, got " +
                       shape_to_string(tokens.shape()));
}

Tensor self_attn(const Tensor& v) { return bmm(attention_map(v, v), v); }

Tensor cross_attn(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.shape().back() != b.shape().back() ||
      (a.rank() == 3 && a.dim(0) != b.dim(0))) {
    throw DimensionError("cross_attn: token widths differ, " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  return bmm(attention_map(a, b), b);
}

void DiffAttnParams::validate() const {
  const Shape expected{d_model, 2 * d};
  for (const Tensor* w : {&w_q, &w_k, &w_v}) {
    if (!w->defined() || w->shape() != expected) {
      throw DimensionError("DiffAttnParams: projection must be " +
                           shape_to_string(expected));
    }
  }
  if (!lambda.defined() || lambda.numel() != 1) {
    throw DimensionError("DiffAttnParams: lambda must be a scalar");
  }
}

DiffAttnParams init_diff_attn(std::size_t d_model, std::size_t d, double lambda_init,
                              std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto draw = [&] {
    std::vector<double> v(d_model * 2 * d);
    for (auto& x : v) x = dist(rng);
    return Tensor::from_values({d_model, 2 * d}, std::move(v), true);
  };
  DiffAttnParams p;
  p.w_q = draw();
  p.w_k = draw();
  p.w_v = draw();
  p.lambda = Tensor::scalar(lambda_init, true);
  p.d = d;
  p.d_model = d_model;
  return p;
}

Tensor diff_attn(const Tensor& x, const DiffAttnParams& p) {
  p.validate();
  if ((x.rank() != 2 && x.rank() != 3) || x.shape().back() != p.d_model) {
    throw DimensionError("diff_attn: input " + shape_to_string(x.shape()) +
                         " does not have width d_model = " + std::to_string(p.d_model));
  }
  const Tensor q = project_last(x, p.w_q);
  const Tensor k = project_last(x, p.w_k);
  const Tensor v = project_last(x, p.w_v);
  const Tensor a1 = attention_map(slice_last(q, 0, p.d), slice_last(k, 0, p.d));
  const Tensor a2 = attention_map(slice_last(q, p.d, p.d), slice_last(k, p.d, p.d));
  return bmm(sub(a1, scale_by(p.lambda, a2)), v);
}

}  // namespace fusionette
