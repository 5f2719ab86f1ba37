#include "fusionette/fusion.hpp"

#include "fusionette/error.hpp"

namespace fusionette {

namespace {

Tensor activate(const Tensor& x, Activation a) {
  return a == Activation::ReLU ? relu(x) : fusionette::tanh(x);
}

Tensor as_batch(const Tensor& f) {
  return f.rank() == 1 ? reshape(f, {1, f.dim(0)}) : f;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || x.dim(1) != w.dim(0)) {
    throw DimensionError("affine map: input " + shape_to_string(x.shape()) +
                         " does not match weight " + shape_to_string(w.shape()));
  }
  return add_bias(matmul(x, w), b);
}

// tokenize -> self_attn -> flatten, per row of a [B, D] batch.
Tensor refine(const Tensor& f, std::size_t n_tok) {
  return flatten_tokens(self_attn(reshape_tokens(f, n_tok).tokens));
}

Tensor diff_refine(const Tensor& z, const Model& model) {
  const auto& spec = model.spec;
  const Tensor tokens = reshape_tokens(z, spec.n_tok_fused).tokens;
  return flatten_tokens(diff_attn(tokens, diff_params(model)));
}

void check_width(const Tensor& f, std::size_t expected, const char* what) {
  if (f.rank() != 2 || f.dim(1) != expected) {
    throw DimensionError(std::string(what) + " batch " + shape_to_string(f.shape()) +
                         " does not have width " + std::to_string(expected));
  }
}

}  // namespace

GateOutput guided_gate(const Tensor& f, const Tensor& proj_w, const Tensor& proj_b,
                       const Tensor& gate_w, const Tensor& gate_b, Activation activation) {
  if (f.rank() != 1 && f.rank() != 2) {
    throw DimensionError("guided_gate: expected [D] or [B, D], got " +
                         shape_to_string(f.shape()));
  }
  if (proj_w.rank() != 2 || gate_w.shape() != proj_w.shape() ||
      proj_b.shape() != Shape{proj_w.dim(1)} || gate_b.shape() != proj_b.shape()) {
    throw DimensionError("guided_gate: inconsistent projection " +
                         shape_to_string(proj_w.shape()) + "/" +
                         shape_to_string(proj_b.shape()) + " and gate " +
                         shape_to_string(gate_w.shape()) + "/" +
                         shape_to_string(gate_b.shape()));
  }
  const Tensor x = as_batch(f);
  GateOutput out{activate(affine(x, proj_w, proj_b), activation),
                 sigmoid(affine(x, gate_w, gate_b))};
  if (f.rank() == 1) {
    out.z = reshape(out.z, {proj_w.dim(1)});
    out.alpha = reshape(out.alpha, {proj_w.dim(1)});
  }
  return out;
}

Tensor guided_ca_fuse(const Tensor& f_i, const Tensor& f_t, const GuidedCAParams& p,
                      bool with_self_attn, std::size_t n_tok, Activation activation,
                      FusionActivations* trace) {
  if (f_i.rank() != f_t.rank()) {
    throw DimensionError("guided_ca_fuse: image " + shape_to_string(f_i.shape()) +
                         " and text " + shape_to_string(f_t.shape()) +
                         " differ in rank");
  }
  Tensor img = f_i, txt = f_t;
  if (with_self_attn) {
    img = refine(img, n_tok);
    txt = refine(txt, n_tok);
  }
  const GateOutput gi = guided_gate(img, p.w_i, p.b_i, p.w_i_gate, p.b_i_gate, activation);
  const GateOutput gt = guided_gate(txt, p.w_t, p.b_t, p.w_t_gate, p.b_t_gate, activation);
  Tensor z = concat_last(mul(gt.alpha, gi.z), mul(gi.alpha, gt.z));
  if (trace) {
    trace->z_i = gi.z;
    trace->z_t = gt.z;
    trace->alpha_i = gi.alpha;
    trace->alpha_t = gt.alpha;
    trace->z = z;
  }
  return z;
}

Tensor cross_attention_fuse(const Tensor& f_i, const Tensor& f_t, std::size_t n_tok) {
  const Tensor it = reshape_tokens(f_i, n_tok).tokens;
  const Tensor tt = reshape_tokens(f_t, n_tok).tokens;
  return concat_last(flatten_tokens(cross_attn(it, tt)), flatten_tokens(cross_attn(tt, it)));
}

GuidedCAParams guided_params(const Model& model) {
  GuidedCAParams p;
  p.w_i = model.param(param::kImageProjW);
  p.b_i = model.param(param::kImageProjB);
  p.w_i_gate = model.param(param::kImageGateW);
  p.b_i_gate = model.param(param::kImageGateB);
  p.w_t = model.param(param::kTextProjW);
  p.b_t = model.param(param::kTextProjB);
  p.w_t_gate = model.param(param::kTextGateW);
  p.b_t_gate = model.param(param::kTextGateB);
  p.hidden = model.spec.hidden;
  return p;
}

DiffAttnParams diff_params(const Model& model) {
  DiffAttnParams p;
  p.w_q = model.param(param::kDiffWq);
  p.w_k = model.param(param::kDiffWk);
  p.w_v = model.param(param::kDiffWv);
  p.lambda = model.param(param::kDiffLambda);
  p.d_model = model.spec.diff_d_model();
  p.d = model.spec.diff_d();
  return p;
}

Model build_variant(const VariantSpec& spec, std::uint64_t seed) {
  return init_model(spec, seed);
}

Tensor forward_batch(const Model& model, const Tensor& f_i, const Tensor& f_t,
                     FusionActivations* trace) {
  const auto& spec = model.spec;
  check_width(f_i, spec.dim_image, "image");
  check_width(f_t, spec.dim_text, "text");
  if (f_i.dim(0) != f_t.dim(0)) {
    throw DimensionError("forward: image batch " + std::to_string(f_i.dim(0)) +
                         " and text batch " + std::to_string(f_t.dim(0)) + " differ");
  }

  Tensor z;
  switch (spec.variant) {
    case Variant::ImageOnly: z = f_i; break;
    case Variant::TextOnly: z = f_t; break;
    case Variant::CrossAttention:
    case Variant::CrossDiffAttn: z = cross_attention_fuse(f_i, f_t, spec.n_tok); break;
    case Variant::GuidedCA:
    case Variant::GuidedCASelfAttn:
    case Variant::GuidedCADiffAttn:
      z = guided_ca_fuse(f_i, f_t, guided_params(model), spec.uses_self_attn(),
                         spec.n_tok, spec.activation, trace);
      break;
  }
  if (trace) trace->z = z;

  Tensor head_in = z;
  if (spec.uses_diff_attn()) {
    head_in = diff_refine(z, model);
    if (trace) trace->z_prime = head_in;
  }
  return affine(head_in, model.param(param::kHeadW), model.param(param::kHeadB));
}

Tensor model_forward(const Model& model, const EmbeddingRecord& record) {
  const auto& spec = model.spec;
  if (record.f_i.size() != spec.dim_image || record.f_t.size() != spec.dim_text) {
    throw DimensionError("record '" + record.id + "' has widths (" +
                         std::to_string(record.f_i.size()) + ", " +
                         std::to_string(record.f_t.size()) + "), model expects (" +
                         std::to_string(spec.dim_image) + ", " +
                         std::to_string(spec.dim_text) + ")");
  }
  const Tensor fi = Tensor::from_values({1, spec.dim_image}, record.f_i);
  const Tensor ft = Tensor::from_values({1, spec.dim_text}, record.f_t);
  return reshape(forward_batch(model, fi, ft), {spec.num_classes});
}

std::pair<Tensor, Tensor> stack_records(std::span<const EmbeddingRecord> records,
                                        std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidArgument("stack_records: empty batch");
  const std::size_t di = records[indices[0]].f_i.size();
  const std::size_t dt = records[indices[0]].f_t.size();
  std::vector<double> fi, ft;
  fi.reserve(indices.size() * di);
  ft.reserve(indices.size() * dt);
  for (auto i : indices) {
    const auto& r = records[i];
    if (r.f_i.size() != di || r.f_t.size() != dt) {
      throw DimensionError("stack_records: record '" + r.id + "' has different widths");
    }
    fi.insert(fi.end(), r.f_i.begin(), r.f_i.end());
    ft.insert(ft.end(), r.f_t.begin(), r.f_t.end());
  }
  return {Tensor::from_values({indices.size(), di}, std::move(fi)),
          Tensor::from_values({indices.size(), dt}, std::move(ft))};
}

}  // namespace fusionette
