#include "fusionette/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fusionette/binary_io.hpp"
#include "fusionette/error.hpp"
#include "fusionette/fusion.hpp"

namespace fusionette {

namespace {

struct ParamSlot {
  std::string name;
  Shape shape;
  std::size_t fan_in = 0;  ///< 0 marks lambda
};

std::vector<ParamSlot> slots_for(const VariantSpec& spec) {
  std::vector<ParamSlot> out;
  if (spec.uses_guided()) {
    const auto h = spec.hidden, di = spec.dim_image, dt = spec.dim_text;
    out.push_back({param::kImageProjW, {di, h}, di});
    out.push_back({param::kImageProjB, {h}, di});
    out.push_back({param::kImageGateW, {di, h}, di});
    out.push_back({param::kImageGateB, {h}, di});
    out.push_back({param::kTextProjW, {dt, h}, dt});
    out.push_back({param::kTextProjB, {h}, dt});
    out.push_back({param::kTextGateW, {dt, h}, dt});
    out.push_back({param::kTextGateB, {h}, dt});
  }
  if (spec.uses_diff_attn()) {
    const auto dm = spec.diff_d_model(), d = spec.diff_d();
    out.push_back({param::kDiffWq, {dm, 2 * d}, dm});
    out.push_back({param::kDiffWk, {dm, 2 * d}, dm});
    out.push_back({param::kDiffWv, {dm, 2 * d}, dm});
    out.push_back({param::kDiffLambda, {}, 0});
  }
  const auto in = spec.head_width();
  out.push_back({param::kHeadW, {in, spec.num_classes}, in});
  out.push_back({param::kHeadB, {spec.num_classes}, in});
  return out;
}

}  // namespace

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.push_back(t);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.numel();
  return n;
}

const Tensor& Model::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) {
    throw InvalidArgument("variant " + std::string(variant_name(spec.variant)) +
                          " has no parameter '" + name + "'");
  }
  return it->second;
}

Model Model::clone() const {
  Model m;
  m.spec = spec;
  m.seed = seed;
  for (const auto& [name, t] : params) m.params.emplace(name, t.detach(true));
  return m;
}

void Model::assign_values(const Model& other) {
  for (const auto& [name, t] : params) {
    const Tensor& src = other.param(name);
    if (src.shape() != t.shape()) {
      throw DimensionError("assign_values: parameter '" + name + "' has shape " +
                           shape_to_string(src.shape()) + ", expected " +
                           shape_to_string(t.shape()));
    }
    std::copy(src.values().begin(), src.values().end(), t.mutable_values().begin());
  }
}

std::vector<std::pair<std::string, Shape>> parameter_layout(const VariantSpec& spec) {
  std::vector<std::pair<std::string, Shape>> out;
  for (auto& s : slots_for(spec)) out.emplace_back(std::move(s.name), std::move(s.shape));
  return out;
}

Model init_model(const VariantSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec = spec;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& slot : slots_for(spec)) {
    if (slot.fan_in == 0) {
      m.params.emplace(slot.name, Tensor::scalar(spec.lambda_init, true));
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(slot.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(shape_numel(slot.shape));
    for (auto& v : values) v = dist(rng);
    m.params.emplace(slot.name,
                     Tensor::from_values(std::move(slot.shape), std::move(values), true));
  }
  return m;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Prediction predict(const Model& model, const EmbeddingRecord& record) {
  NoGradGuard no_grad;
  const Tensor probs = softmax_rows(model_forward(model, record));
  Prediction p;
  p.probs.assign(probs.values().begin(), probs.values().end());
  p.label = argmax(p.probs);
  return p;
}

std::vector<std::size_t> predict_labels(const Model& model,
                                        std::span<const EmbeddingRecord> records,
                                        std::size_t batch_size) {
  NoGradGuard no_grad;
  std::vector<std::size_t> out;
  out.reserve(records.size());
  const std::size_t c = model.spec.num_classes;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t end = std::min(records.size(), start + batch_size);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    auto [fi, ft] = stack_records(records, idx);
    const Tensor logits = forward_batch(model, fi, ft);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.push_back(argmax(logits.values().subspan(r * c, c)));
    }
  }
  return out;
}

// ---- serialization --------------------------------------------------------

std::vector<std::uint8_t> encode_model(const Model& model) {
  io::ByteWriter w;
  w.raw(std::string_view(kModelMagic, 4));
  w.u16(kModelVersion);
  const nlohmann::json header = {{"spec", to_json(model.spec)}, {"seed", model.seed}};
  w.string32(header.dump());
  w.u32(static_cast<std::uint32_t>(model.params.size()));
  for (const auto& [name, t] : model.params) {
    w.string16(name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (auto e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
    for (double v : t.values()) w.f64(v);
  }
  w.crc_trailer();
  return w.take();
}

Model decode_model(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.require(4);
  if (r.raw(4) != std::string_view(kModelMagic, 4)) {
    throw BadMagicError("not a model file (bad magic)");
  }
  const auto version = r.u16();
  if (version != kModelVersion) {
    throw VersionError("unsupported model file version " + std::to_string(version));
  }
  const std::string header_text = r.string32();
  const std::uint32_t count = r.u32();
  std::vector<std::pair<std::string, Tensor>> loaded;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.string16();
    const std::size_t rank = r.u8();
    Shape shape(rank);
    for (auto& e : shape) e = r.u32();
    const std::size_t n = shape_numel(shape);
    r.require(n * sizeof(double));
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    loaded.emplace_back(std::move(name),
                        Tensor::from_values(std::move(shape), std::move(values), true));
  }
  r.verify_crc_trailer();

  Model m;
  try {
    const auto header = nlohmann::json::parse(header_text);
    m.spec = variant_spec_from_json(header.at("spec"));
    m.seed = header.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidPayloadError(std::string("model header: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidPayloadError(std::string("model header: ") + e.what());
  }
  try {
    m.spec.validate();
  } catch (const Error& e) {
    throw InvalidPayloadError(std::string("model header: ") + e.what());
  }
  for (auto& [name, t] : loaded) {
    if (!m.params.emplace(name, t).second) {
      throw InvalidPayloadError("model file repeats parameter '" + name + "'");
    }
  }
  const auto layout = parameter_layout(m.spec);
  if (layout.size() != m.params.size()) {
    throw InvalidPayloadError("model file has " + std::to_string(m.params.size()) +
                              " parameters, variant expects " +
                              std::to_string(layout.size()));
  }
  for (const auto& [name, shape] : layout) {
    auto it = m.params.find(name);
    if (it == m.params.end() || it->second.shape() != shape) {
      throw InvalidPayloadError("model file parameter '" + name +
                                "' missing or has the wrong shape");
    }
  }
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_model(model));
}

Model load_model(const std::filesystem::path& path) {
  return decode_model(io::read_file(path));
}

}  // namespace fusionette
