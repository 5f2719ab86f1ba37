#include "fusionette/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "fusionette/binary_io.hpp"
#include "fusionette/error.hpp"

namespace fusionette {

namespace fs = std::filesystem;

std::string_view split_name_str(SplitName s) {
  switch (s) {
    case SplitName::Train: return "train";
    case SplitName::Validation: return "validation";
    case SplitName::Test: return "test";
  }
  return "?";
}

SplitName parse_split_name(std::string_view s) {
  if (s == "train") return SplitName::Train;
  if (s == "validation" || s == "val") return SplitName::Validation;
  if (s == "test") return SplitName::Test;
  throw InvalidArgument("unknown split name '" + std::string(s) + "'");
}

void DatasetSplit::validate() const {
  if (class_names.size() != num_classes) {
    throw InvalidPayloadError("split declares " + std::to_string(num_classes) +
                              " classes but names " +
                              std::to_string(class_names.size()));
  }
  std::set<std::string_view> ids;
  for (const auto& r : records) {
    if (r.id.empty()) throw InvalidPayloadError("record with empty id");
    if (!ids.insert(r.id).second) {
      throw InvalidPayloadError("duplicate record id '" + r.id + "'");
    }
    if (r.f_i.size() != dim_image || r.f_t.size() != dim_text) {
      throw InvalidPayloadError("record '" + r.id + "' has embedding widths (" +
                                std::to_string(r.f_i.size()) + ", " +
                                std::to_string(r.f_t.size()) + "), split declares (" +
                                std::to_string(dim_image) + ", " +
                                std::to_string(dim_text) + ")");
    }
    if (r.label >= num_classes) {
      throw InvalidPayloadError("record '" + r.id + "' has label " +
                                std::to_string(r.label) + " >= num_classes " +
                                std::to_string(num_classes));
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(r.f_i.begin(), r.f_i.end(), finite) ||
        !std::all_of(r.f_t.begin(), r.f_t.end(), finite)) {
      throw InvalidPayloadError("record '" + r.id + "' has a non-finite embedding value");
    }
  }
}

namespace {

void write_header(io::ByteWriter& w, const SplitHeader& h) {
  w.raw(std::string_view(kEmbeddingMagic, 4));
  w.u16(kEmbeddingVersion);
  w.u8(h.task_id);
  w.string16(split_name_str(h.split));
  w.u16(static_cast<std::uint16_t>(h.num_classes));
  for (const auto& name : h.class_names) w.string16(name);
  w.u32(static_cast<std::uint32_t>(h.dim_image));
  w.u32(static_cast<std::uint32_t>(h.dim_text));
  w.u64(h.count);
}

SplitHeader parse_header(io::ByteReader& r) {
  r.require(4);
  if (r.raw(4) != std::string_view(kEmbeddingMagic, 4)) {
    throw BadMagicError("not an MMEB file (bad magic)");
  }
  const auto version = r.u16();
  if (version != kEmbeddingVersion) {
    throw VersionError("unsupported MMEB version " + std::to_string(version));
  }
  SplitHeader h;
  h.task_id = r.u8();
  const std::string split = r.string16();
  try {
    h.split = parse_split_name(split);
  } catch (const InvalidArgument&) {
    throw FormatError("MMEB header names unknown split '" + split + "'");
  }
  h.num_classes = r.u16();
  h.class_names.reserve(h.num_classes);
  for (std::size_t c = 0; c < h.num_classes; ++c) h.class_names.push_back(r.string16());
  h.dim_image = r.u32();
  h.dim_text = r.u32();
  h.count = r.u64();
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_split(const DatasetSplit& split) {
  split.validate();
  if (split.num_classes > 0xFFFF) throw InvalidArgument("too many classes for MMEB");
  io::ByteWriter w;
  write_header(w, {split.task_id, split.split, split.num_classes, split.class_names,
                   split.dim_image, split.dim_text, split.records.size()});
  for (const auto& rec : split.records) {
    w.string16(rec.id);
    w.u32(static_cast<std::uint32_t>(rec.label));
    for (double v : rec.f_i) w.f32(static_cast<float>(v));
    for (double v : rec.f_t) w.f32(static_cast<float>(v));
  }
  w.crc_trailer();
  return w.take();
}

DatasetSplit decode_split(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  SplitHeader h = parse_header(r);
  // id length (2) + label (4) + embeddings: the smallest possible record.
  const std::size_t min_record = 6 + 4 * (h.dim_image + h.dim_text);
  if (h.count > r.remaining() / min_record) {
    throw TruncationError("MMEB header promises " + std::to_string(h.count) +
                          " records but only " + std::to_string(r.remaining()) +
                          " bytes follow");
  }
  DatasetSplit split;
  split.task_id = h.task_id;
  split.split = h.split;
  split.num_classes = h.num_classes;
  split.class_names = std::move(h.class_names);
  split.dim_image = h.dim_image;
  split.dim_text = h.dim_text;
  split.records.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    EmbeddingRecord rec;
    rec.id = r.string16();
    rec.label = r.u32();
    r.require(4 * (h.dim_image + h.dim_text));
    rec.f_i.resize(h.dim_image);
    rec.f_t.resize(h.dim_text);
    for (auto& v : rec.f_i) v = r.f32();
    for (auto& v : rec.f_t) v = r.f32();
    split.records.push_back(std::move(rec));
  }
  r.verify_crc_trailer();
  split.validate();
  return split;
}

void write_split(const DatasetSplit& split, const fs::path& path) {
  io::write_file_atomic(path, encode_split(split));
}

DatasetSplit read_split(const fs::path& path) { return decode_split(io::read_file(path)); }

SplitHeader read_split_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  // Headers are small: magic, counts and class names. 64 KiB per class name
  // is the format's upper bound, so read generously and parse.
  std::vector<std::uint8_t> head(1 << 16);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  try {
    io::ByteReader r(head);
    return parse_header(r);
  } catch (const TruncationError&) {
    // Header longer than the first chunk (many long class names): fall back
    // to the whole file.
    auto all = io::read_file(path);
    io::ByteReader r(all);
    return parse_header(r);
  }
}

std::uint32_t stored_crc(const fs::path& path) {
  auto bytes = io::read_file(path);
  if (bytes.size() < 4) throw TruncationError("'" + path.string() + "' has no trailer");
  io::ByteReader r(std::span<const std::uint8_t>(bytes).last(4));
  return r.u32();
}

const fs::path& DatasetFiles::operator[](SplitName s) const {
  switch (s) {
    case SplitName::Train: return train;
    case SplitName::Validation: return validation;
    case SplitName::Test: return test;
  }
  return train;
}

DatasetFiles discover_splits(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("'" + dir.string() + "' is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  DatasetFiles found;
  fs::path* slots[] = {&found.train, &found.validation, &found.test};
  for (const auto& f : files) {
    SplitHeader h;
    try {
      h = read_split_header(f);
    } catch (const FormatError&) {
      continue;  // not an MMEB file
    }
    fs::path& slot = *slots[static_cast<int>(h.split)];
    if (!slot.empty()) {
      throw IoError("directory '" + dir.string() + "' holds two '" +
                    std::string(split_name_str(h.split)) + "' splits: " +
                    slot.filename().string() + " and " + f.filename().string());
    }
    slot = f;
  }
  for (auto s : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
    if (found[s].empty()) {
      throw IoError("directory '" + dir.string() + "' has no '" +
                    std::string(split_name_str(s)) + "' MMEB split");
    }
  }
  return found;
}

}  // namespace fusionette
