#include <doctest.h>

#include <cmath>
#include <random>

#include "fusionette/error.hpp"
#include "fusionette/fusion.hpp"
#include "fusionette/model.hpp"
#include "oracle.hpp"

using namespace fusionette;

namespace {

VariantSpec small_spec(Variant v) {
  VariantSpec s;
  s.variant = v;
  s.dim_image = 8;
  s.dim_text = 8;
  s.n_tok = 2;
  s.n_tok_fused = 2;
  s.hidden = 4;
  s.num_classes = 3;
  return s;
}

EmbeddingRecord random_record(std::size_t di, std::size_t dt, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  EmbeddingRecord r;
  r.id = "r";
  r.f_i.resize(di);
  r.f_t.resize(dt);
  for (auto& x : r.f_i) x = n(rng);
  for (auto& x : r.f_t) x = n(rng);
  return r;
}

std::vector<double> to_vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

// Parameter count by formula, written out per variant.
std::size_t expected_params(const VariantSpec& s) {
  const std::size_t di = s.dim_image, dt = s.dim_text, h = s.hidden, c = s.num_classes;
  const std::size_t guided = 2 * (di * h + h) + 2 * (dt * h + h);
  switch (s.variant) {
    case Variant::ImageOnly: return di * c + c;
    case Variant::TextOnly: return dt * c + c;
    case Variant::CrossAttention: return (di + dt) * c + c;
    case Variant::GuidedCA:
    case Variant::GuidedCASelfAttn: return guided + 2 * h * c + c;
    case Variant::CrossDiffAttn: {
      const std::size_t dm = (di + dt) / s.n_tok_fused;
      return 3 * dm * dm + 1 + (di + dt) * c + c;
    }
    case Variant::GuidedCADiffAttn: {
      const std::size_t dm = 2 * h / s.n_tok_fused;
      return guided + 3 * dm * dm + 1 + 2 * h * c + c;
    }
  }
  return 0;
}

}  // namespace

TEST_CASE("guided_gate examples") {
  std::mt19937_64 rng(2);
  const std::size_t d = 6, h = 3;
  const auto f = oracle::random_tensor({d}, rng);
  SUBCASE("all-zero parameters") {
    const auto g = guided_gate(f, Tensor::zeros({d, h}), Tensor::zeros({h}), Tensor::zeros({d, h}),
                               Tensor::zeros({h}));
    for (auto v : g.z.values()) CHECK(v == 0.0);
    for (auto v : g.alpha.values()) CHECK(v == 0.5);
  }
  SUBCASE("saturated gate bias opens the gate") {
    const auto g = guided_gate(f, oracle::random_tensor({d, h}, rng), Tensor::zeros({h}),
                               oracle::random_tensor({d, h}, rng), Tensor::full({h}, 1e6));
    for (auto v : g.alpha.values()) CHECK(std::abs(v - 1.0) < 1e-12);
  }
  SUBCASE("random parameters against direct evaluation") {
    const auto w = oracle::random_mat(d, h, rng), wg = oracle::random_mat(d, h, rng);
    const auto b = oracle::random_mat(1, h, rng)[0], bg = oracle::random_mat(1, h, rng)[0];
    const auto g = guided_gate(f, oracle::from_mat(w), Tensor::from_values({h}, b),
                               oracle::from_mat(wg), Tensor::from_values({h}, bg));
    const auto [z, alpha] = oracle::guided_gate(to_vec(f), w, b, wg, bg);
    CHECK(oracle::max_abs_diff(g.z.values(), z) < 1e-12);
    CHECK(oracle::max_abs_diff(g.alpha.values(), alpha) < 1e-12);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(guided_gate(f, Tensor::zeros({d + 1, h}), Tensor::zeros({h}),
                                Tensor::zeros({d + 1, h}), Tensor::zeros({h})),
                    DimensionError);
  }
}

TEST_CASE("gates stay strictly inside (0, 1)") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = guided_gate(oracle::random_tensor({4, 5}, rng, false, -5, 5),
                               oracle::random_tensor({5, 3}, rng), oracle::random_tensor({3}, rng),
                               oracle::random_tensor({5, 3}, rng), oracle::random_tensor({3}, rng));
    for (auto a : g.alpha.values()) {
      CHECK(a > 0.0);
      CHECK(a < 1.0);
    }
  }
}

TEST_CASE("guided_ca_fuse examples") {
  std::mt19937_64 rng(10);
  auto model = init_model(small_spec(Variant::GuidedCA), 1);
  auto p = guided_params(model);
  const auto rec = random_record(8, 8, rng);
  const auto fi = Tensor::from_values({8}, rec.f_i), ft = Tensor::from_values({8}, rec.f_t);

  SUBCASE("text gate open, image gate closed") {
    std::fill(p.b_t_gate.mutable_values().begin(), p.b_t_gate.mutable_values().end(), 1e6);
    std::fill(p.b_i_gate.mutable_values().begin(), p.b_i_gate.mutable_values().end(), -1e6);
    FusionActivations trace;
    const auto z = guided_ca_fuse(fi, ft, p, false, 1, Activation::ReLU, &trace);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(z.at(j) - trace.z_i.at(j)) < 1e-12);
      CHECK(std::abs(z.at(4 + j)) < 1e-12);
    }
  }
  SUBCASE("image gate open, text gate closed") {
    std::fill(p.b_t_gate.mutable_values().begin(), p.b_t_gate.mutable_values().end(), -1e6);
    std::fill(p.b_i_gate.mutable_values().begin(), p.b_i_gate.mutable_values().end(), 1e6);
    FusionActivations trace;
    const auto z = guided_ca_fuse(fi, ft, p, false, 1, Activation::ReLU, &trace);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(z.at(j)) < 1e-12);
      CHECK(std::abs(z.at(4 + j) - trace.z_t.at(j)) < 1e-12);
    }
  }
  SUBCASE("one-token self-attention changes nothing") {
    const auto a = guided_ca_fuse(fi, ft, p, false, 1);
    const auto b = guided_ca_fuse(fi, ft, p, true, 1);
    CHECK(to_vec(a) == to_vec(b));
  }
  SUBCASE("random inputs against gate composition") {
    const auto [zi, ai] = oracle::guided_gate(rec.f_i, oracle::to_mat(p.w_i), to_vec(p.b_i),
                                              oracle::to_mat(p.w_i_gate), to_vec(p.b_i_gate));
    const auto [zt, at] = oracle::guided_gate(rec.f_t, oracle::to_mat(p.w_t), to_vec(p.b_t),
                                              oracle::to_mat(p.w_t_gate), to_vec(p.b_t_gate));
    oracle::Vec want;
    for (std::size_t j = 0; j < 4; ++j) want.push_back(at[j] * zi[j]);
    for (std::size_t j = 0; j < 4; ++j) want.push_back(ai[j] * zt[j]);
    CHECK(oracle::max_abs_diff(guided_ca_fuse(fi, ft, p, false, 1).values(), want) < 1e-12);
  }
  SUBCASE("with self-attention against brute force") {
    oracle::Mat ti, tt;
    for (std::size_t r = 0; r < 2; ++r) {
      ti.emplace_back(rec.f_i.begin() + r * 4, rec.f_i.begin() + r * 4 + 4);
      tt.emplace_back(rec.f_t.begin() + r * 4, rec.f_t.begin() + r * 4 + 4);
    }
    oracle::Vec ri, rt;
    for (const auto& row : oracle::attention(ti, ti)) ri.insert(ri.end(), row.begin(), row.end());
    for (const auto& row : oracle::attention(tt, tt)) rt.insert(rt.end(), row.begin(), row.end());
    const auto [zi, ai] = oracle::guided_gate(ri, oracle::to_mat(p.w_i), to_vec(p.b_i),
                                              oracle::to_mat(p.w_i_gate), to_vec(p.b_i_gate));
    const auto [zt, at] = oracle::guided_gate(rt, oracle::to_mat(p.w_t), to_vec(p.b_t),
                                              oracle::to_mat(p.w_t_gate), to_vec(p.b_t_gate));
    oracle::Vec want;
    for (std::size_t j = 0; j < 4; ++j) want.push_back(at[j] * zi[j]);
    for (std::size_t j = 0; j < 4; ++j) want.push_back(ai[j] * zt[j]);
    CHECK(oracle::max_abs_diff(guided_ca_fuse(fi, ft, p, true, 2).values(), want) < 1e-12);
  }
}

TEST_CASE("n_tok = 1 collapses guided_ca_self_attn to guided_ca bitwise") {
  std::mt19937_64 rng(12);
  auto sa = small_spec(Variant::GuidedCASelfAttn);
  sa.n_tok = 1;
  const auto m_sa = init_model(sa, 5);
  auto plain = m_sa.clone();
  plain.spec.variant = Variant::GuidedCA;
  for (int i = 0; i < 10; ++i) {
    const auto rec = random_record(8, 8, rng);
    CHECK(to_vec(model_forward(m_sa, rec)) == to_vec(model_forward(plain, rec)));
  }
}

TEST_CASE("lambda = 0 and one fused token reduce DiffAttn to a fixed linear map") {
  std::mt19937_64 rng(14);
  for (const auto [diff, base] : {std::pair{Variant::GuidedCADiffAttn, Variant::GuidedCASelfAttn},
                                  std::pair{Variant::CrossDiffAttn, Variant::CrossAttention}}) {
    auto ds = small_spec(diff);
    ds.n_tok_fused = 1;
    ds.lambda_init = 0.0;
    const auto m_diff = init_model(ds, 9);

    // Same fusion parameters, head pre-composed with W_v.
    auto bs = ds;
    bs.variant = base;
    auto m_base = init_model(bs, 10);
    for (auto& [name, t] : m_base.params) {
      if (name.rfind("guided.", 0) == 0) {
        const auto src = m_diff.param(name).values();
        std::copy(src.begin(), src.end(), t.mutable_values().begin());
      }
    }
    const auto head = oracle::matmul(oracle::to_mat(m_diff.param(param::kDiffWv)),
                                     oracle::to_mat(m_diff.param(param::kHeadW)));
    auto hw = m_base.param(param::kHeadW).mutable_values();
    for (std::size_t i = 0; i < head.size(); ++i)
      for (std::size_t j = 0; j < head[i].size(); ++j) hw[i * head[i].size() + j] = head[i][j];
    const auto hb = m_diff.param(param::kHeadB).values();
    std::copy(hb.begin(), hb.end(), m_base.param(param::kHeadB).mutable_values().begin());

    for (int i = 0; i < 10; ++i) {
      const auto rec = random_record(8, 8, rng);
      CHECK(oracle::max_abs_diff(model_forward(m_diff, rec).values(),
                                 model_forward(m_base, rec).values()) < 1e-12);
    }
  }
}

TEST_CASE("image_only forward is the affine head on f_i") {
  std::mt19937_64 rng(15);
  const auto m = init_model(small_spec(Variant::ImageOnly), 3);
  const auto rec = random_record(8, 8, rng);
  const auto w = oracle::to_mat(m.param(param::kHeadW));
  const auto b = m.param(param::kHeadB).values();
  const auto want = oracle::matmul({rec.f_i}, w)[0];
  const auto got = model_forward(m, rec);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(got.at(k) - (want[k] + b[k])) < 1e-12);
}

TEST_CASE("every variant forwards a record to finite logits") {
  std::mt19937_64 rng(16);
  const auto rec = random_record(8, 8, rng);
  for (auto v : kAllVariants) {
    CAPTURE(variant_name(v));
    const auto m = build_variant(small_spec(v), 1);
    const auto logits = model_forward(m, rec);
    CHECK(logits.shape() == Shape{3});
    for (auto x : logits.values()) CHECK(std::isfinite(x));
    const auto again = model_forward(m, rec);
    CHECK(to_vec(logits) == to_vec(again));
  }
}

TEST_CASE("batched forward matches per-record forward") {
  std::mt19937_64 rng(18);
  std::vector<EmbeddingRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(random_record(8, 8, rng));
  const std::vector<std::size_t> idx{0, 1, 2, 3, 4};
  for (auto v : kAllVariants) {
    CAPTURE(variant_name(v));
    const auto m = build_variant(small_spec(v), 2);
    auto [fi, ft] = stack_records(recs, idx);
    const auto batch = forward_batch(m, fi, ft);
    for (std::size_t r = 0; r < 5; ++r) {
      const auto single = model_forward(m, recs[r]);
      CHECK(oracle::max_abs_diff(batch.values().subspan(r * 3, 3), single.values()) < 1e-12);
    }
  }
}

TEST_CASE("parameter counts follow the per-variant formula") {
  for (auto v : kAllVariants) {
    for (const auto& [di, dt, h, c, nf] :
         {std::tuple{8, 8, 4, 3, 2}, std::tuple{512, 512, 256, 2, 4}, std::tuple{12, 20, 8, 5, 4}}) {
      auto s = small_spec(v);
      s.dim_image = di;
      s.dim_text = dt;
      s.hidden = h;
      s.num_classes = c;
      s.n_tok = 4;
      s.n_tok_fused = nf;
      if ((v == Variant::CrossAttention || v == Variant::CrossDiffAttn) && di != dt) {
        CHECK_THROWS_AS(s.validate(), DimensionError);
        continue;
      }
      CAPTURE(variant_name(v));
      CAPTURE(di);
      CHECK(init_model(s, 0).parameter_count() == expected_params(s));
    }
  }
  VariantSpec image;
  image.variant = Variant::ImageOnly;
  CHECK(init_model(image, 0).parameter_count() == 1026);
}

TEST_CASE("full guided_ca_diff_attn gradient matches finite differences") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto m = init_model(small_spec(Variant::GuidedCADiffAttn), seed);
    std::vector<EmbeddingRecord> recs;
    for (int i = 0; i < 3; ++i) recs.push_back(random_record(8, 8, rng));
    const std::vector<std::size_t> idx{0, 1, 2}, labels{0, 2, 1};
    auto [fi, ft] = stack_records(recs, idx);
    worst = std::max(worst, oracle::gradient_relative_error(
                                [&] { return cross_entropy(forward_batch(m, fi, ft), labels); },
                                m.parameters()));
  }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("spec validation") {
  auto s = small_spec(Variant::GuidedCADiffAttn);
  s.n_tok_fused = 3;  // does not divide 2h = 8
  CHECK_THROWS(s.validate());
  CHECK_THROWS_AS(parse_variant("bogus"), UnknownVariantError);
  for (auto v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
  auto j = to_json(small_spec(Variant::CrossDiffAttn));
  CHECK(variant_spec_from_json(j) == small_spec(Variant::CrossDiffAttn));
}
