#pragma once

// The MMEB embedding container: one file per split, little-endian.
//
//   "MMEB"  version:u16  task_id:u8  split_name:str16  num_classes:u16
//   class_name:str16 * num_classes  D_I:u32  D_T:u32  n:u64
//   n * { id:str16  label:u32  f_i:f32[D_I]  f_t:f32[D_T] }
//   crc32:u32   (over every preceding byte)
//
// str16 is a u16 byte length followed by UTF-8 bytes. Embeddings are stored
// as f32 and widened to f64 on read.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fusionette {

inline constexpr char kEmbeddingMagic[4] = {'M', 'M', 'E', 'B'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;

struct EmbeddingRecord {
  std::string id;
  std::vector<double> f_i;  ///< image embedding
  std::vector<double> f_t;  ///< text embedding
  std::size_t label = 0;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

enum class SplitName { Train, Validation, Test };

std::string_view split_name_str(SplitName s);
/// Throws InvalidArgument.
SplitName parse_split_name(std::string_view s);

struct DatasetSplit {
  std::vector<EmbeddingRecord> records;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;
  std::uint8_t task_id = 0;  ///< 1..3 for the crisis tasks, 0 for synthetic data
  SplitName split = SplitName::Train;
  std::size_t dim_image = 0;
  std::size_t dim_text = 0;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  /// Checks dims, label range, finiteness and id uniqueness.
  /// Throws InvalidPayloadError.
  void validate() const;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// Everything before the first record, plus the stored trailer CRC.
struct SplitHeader {
  std::uint8_t task_id = 0;
  SplitName split = SplitName::Train;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;
  std::size_t dim_image = 0;
  std::size_t dim_text = 0;
  std::uint64_t count = 0;
};

std::vector<std::uint8_t> encode_split(const DatasetSplit& split);
/// Parses and verifies a complete MMEB image. Error precedence: bad magic,
/// unsupported version, truncation, CRC mismatch, then payload validation.
DatasetSplit decode_split(std::span<const std::uint8_t> bytes);

void write_split(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit read_split(const std::filesystem::path& path);

/// Reads only the header; the CRC is not verified.
SplitHeader read_split_header(const std::filesystem::path& path);
/// CRC32 trailer stored in an MMEB or model file (last four bytes).
std::uint32_t stored_crc(const std::filesystem::path& path);

/// The three splits of one dataset directory.
struct DatasetFiles {
  std::filesystem::path train;
  std::filesystem::path validation;
  std::filesystem::path test;

  const std::filesystem::path& operator[](SplitName s) const;
};

/// Finds the train/validation/test MMEB files of a directory by the split
/// name recorded in each header (file names are irrelevant). Throws IoError
/// when a split is missing or duplicated.
DatasetFiles discover_splits(const std::filesystem::path& dir);

}  // namespace fusionette
