#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "fusionette/binary_io.hpp"
#include "fusionette/error.hpp"
#include "fusionette/fusion.hpp"
#include "fusionette/model.hpp"
#include "oracle.hpp"

using namespace fusionette;
namespace fs = std::filesystem;

namespace {

VariantSpec spec_for(Variant v) {
  VariantSpec s;
  s.variant = v;
  s.dim_image = 8;
  s.dim_text = 12;
  s.n_tok = 4;
  s.n_tok_fused = 2;
  s.hidden = 4;
  s.num_classes = 3;
  return s;
}

EmbeddingRecord random_record(const VariantSpec& s, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  EmbeddingRecord r;
  r.f_i.resize(s.dim_image);
  r.f_t.resize(s.dim_text);
  for (auto& x : r.f_i) x = n(rng);
  for (auto& x : r.f_t) x = n(rng);
  return r;
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "fusionette_test_model";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("init_model is seeded") {
  const auto s = spec_for(Variant::GuidedCADiffAttn);
  const auto a = init_model(s, 42), b = init_model(s, 42), c = init_model(s, 43);
  CHECK(encode_model(a) == encode_model(b));
  bool differs = false;
  for (const auto& [name, t] : a.params) {
    if (name == param::kDiffLambda) {
      CHECK(t.item() == 0.8);
      continue;
    }
    const auto other = c.param(name).values();
    differs |= !std::equal(t.values().begin(), t.values().end(), other.begin());
  }
  CHECK(differs);
}

TEST_CASE("initial weights respect the fan-in bound") {
  const auto m = init_model(spec_for(Variant::GuidedCADiffAttn), 7);
  for (const auto& [name, shape] : parameter_layout(m.spec)) {
    if (name == param::kDiffLambda) continue;
    // Biases share the bound of their weight matrix.
    const bool bias = shape.size() == 1;
    std::size_t fan_in = shape[0];
    if (bias) {
      const std::string w = name.substr(0, name.rfind(".b")) + ".w" + name.substr(name.rfind(".b") + 2);
      fan_in = m.param(w).dim(0);
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto v : m.param(name).values()) CHECK(std::abs(v) <= bound);
  }
}

TEST_CASE("predict examples") {
  SUBCASE("zero weights give uniform probabilities and class 0") {
    const auto s = spec_for(Variant::GuidedCA);
    auto m = init_model(s, 1);
    for (auto& [name, t] : m.params) {
      auto v = t.mutable_values();
      std::fill(v.begin(), v.end(), 0.0);
    }
    EmbeddingRecord zero;
    zero.f_i.assign(s.dim_image, 0.0);
    zero.f_t.assign(s.dim_text, 0.0);
    const auto p = predict(m, zero);
    CHECK(p.label == 0);
    for (auto x : p.probs) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("probabilities sum to one and argmax agrees with logits") {
    std::mt19937_64 rng(3);
    for (auto v : kAllVariants) {
      if (v == Variant::CrossAttention || v == Variant::CrossDiffAttn) continue;
      const auto m = init_model(spec_for(v), 2);
      for (int i = 0; i < 20; ++i) {
        const auto rec = random_record(m.spec, rng);
        const auto p = predict(m, rec);
        double total = 0.0;
        for (auto x : p.probs) total += x;
        CHECK(std::abs(total - 1.0) < 1e-12);
        CHECK(p.label == argmax(model_forward(m, rec).values()));
      }
    }
  }
  SUBCASE("shifting every logit leaves the class unchanged") {
    std::mt19937_64 rng(4);
    auto m = init_model(spec_for(Variant::ImageOnly), 5);
    const auto rec = random_record(m.spec, rng);
    const auto before = predict(m, rec).label;
    for (auto& b : m.param(param::kHeadB).mutable_values()) b += 123.5;
    CHECK(predict(m, rec).label == before);
  }
  SUBCASE("ties break to the lowest index") {
    const std::vector<double> v{0.2, 0.7, 0.7, 0.1};
    CHECK(argmax(v) == 1);
  }
}

TEST_CASE("predict_labels agrees with predict") {
  std::mt19937_64 rng(5);
  const auto m = init_model(spec_for(Variant::GuidedCADiffAttn), 8);
  std::vector<EmbeddingRecord> recs;
  for (int i = 0; i < 37; ++i) recs.push_back(random_record(m.spec, rng));
  const auto labels = predict_labels(m, recs, 8);
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(labels[i] == predict(m, recs[i]).label);
}

TEST_CASE("model file round trip") {
  std::mt19937_64 rng(6);
  for (auto v : {Variant::ImageOnly, Variant::GuidedCASelfAttn, Variant::GuidedCADiffAttn}) {
    auto s = spec_for(v);
    s.activation = Activation::Tanh;
    const auto m = init_model(s, 11);
    const auto path = temp_path(std::string(variant_name(v)) + ".fusn");
    save_model(m, path);
    const auto loaded = load_model(path);
    CHECK(loaded.spec == m.spec);
    CHECK(loaded.seed == 11);
    CHECK(encode_model(loaded) == encode_model(m));
    CHECK(io::read_file(path) == encode_model(m));
    for (int i = 0; i < 100; ++i) {
      const auto rec = random_record(s, rng);
      const auto a = predict(m, rec), b = predict(loaded, rec);
      CHECK(a.label == b.label);
      CHECK(a.probs == b.probs);
    }
  }
}

TEST_CASE("model file corruption is reported by kind") {
  const auto bytes = encode_model(init_model(spec_for(Variant::GuidedCA), 1));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_model(bad_magic), BadMagicError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_model(bad_version), VersionError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + cut);
    CHECK_THROWS_AS(decode_model(truncated), TruncationError);
  }

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(decode_model(flipped), ChecksumError);

  auto trailer = bytes;
  trailer.back() ^= 0x01;
  CHECK_THROWS_AS(decode_model(trailer), ChecksumError);

  CHECK_THROWS_AS(load_model(temp_path("does_not_exist.fusn")), IoError);
}

TEST_CASE("clone and assign_values") {
  const auto m = init_model(spec_for(Variant::GuidedCA), 1);
  auto c = m.clone();
  c.param(param::kHeadB).mutable_values()[0] += 1.0;
  CHECK(c.param(param::kHeadB).at(0) != m.param(param::kHeadB).at(0));
  c.assign_values(m);
  CHECK(encode_model(c) == encode_model(m));
  CHECK_THROWS_AS(m.param(param::kDiffWq), InvalidArgument);
}
