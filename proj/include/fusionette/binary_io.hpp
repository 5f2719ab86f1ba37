#pragma once

// Little-endian byte buffers shared by the embedding and model file formats.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fusionette::io {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

class ByteWriter {
 public:
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::span<const std::uint8_t> b);
  void raw(std::string_view s);
  /// u16 length prefix + bytes. Throws InvalidArgument past 65535 bytes.
  void string16(std::string_view s);
  /// u32 length prefix + bytes.
  void string32(std::string_view s);
  /// Appends the CRC32 of everything written so far.
  void crc_trailer();

  const std::vector<std::uint8_t>& buffer() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; running past the end throws TruncationError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string raw(std::size_t n);
  std::string string16();
  std::string string32();

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  /// Fails with TruncationError unless n more bytes are available.
  void require(std::size_t n) const;

  /// Reads the u32 trailer and compares it to the CRC of all bytes before it.
  /// Throws ChecksumError on mismatch and FormatError on trailing garbage.
  void verify_crc_trailer();

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

}  // namespace fusionette::io
