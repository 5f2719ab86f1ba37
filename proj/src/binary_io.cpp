#include "fusionette/binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "fusionette/error.hpp"

namespace fusionette::io {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
    crc = ::crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& buf, T v) {
  std::uint8_t tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));
}

}  // namespace

void ByteWriter::u8(std::uint8_t v) { buf_.push_back(v); }
void ByteWriter::u16(std::uint16_t v) { put(buf_, v); }
void ByteWriter::u32(std::uint32_t v) { put(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put(buf_, v); }
void ByteWriter::f32(float v) { put(buf_, v); }
void ByteWriter::f64(double v) { put(buf_, v); }

void ByteWriter::bytes(std::span<const std::uint8_t> b) {
  buf_.insert(buf_.end(), b.begin(), b.end());
}

void ByteWriter::raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

void ByteWriter::string16(std::string_view s) {
  if (s.size() > 0xFFFF) {
    throw InvalidArgument("string of " + std::to_string(s.size()) +
                          " bytes exceeds the u16 length prefix");
  }
  u16(static_cast<std::uint16_t>(s.size()));
  raw(s);
}

void ByteWriter::string32(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s);
}

void ByteWriter::crc_trailer() { u32(crc32(buf_)); }

void ByteReader::require(std::size_t n) const {
  if (remaining() < n) {
    throw TruncationError("unexpected end of data at byte " + std::to_string(pos_) +
                          " (need " + std::to_string(n) + ", have " +
                          std::to_string(remaining()) + ")");
  }
}

namespace {

template <typename T>
T get(std::span<const std::uint8_t> data, std::size_t& pos) {
  T v;
  std::memcpy(&v, data.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::uint8_t ByteReader::u8() {
  require(1);
  return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
  require(2);
  return get<std::uint16_t>(data_, pos_);
}

std::uint32_t ByteReader::u32() {
  require(4);
  return get<std::uint32_t>(data_, pos_);
}

std::uint64_t ByteReader::u64() {
  require(8);
  return get<std::uint64_t>(data_, pos_);
}

float ByteReader::f32() {
  require(4);
  return get<float>(data_, pos_);
}

double ByteReader::f64() {
  require(8);
  return get<double>(data_, pos_);
}

std::string ByteReader::raw(std::size_t n) {
  require(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::string ByteReader::string16() { return raw(u16()); }

std::string ByteReader::string32() { return raw(u32()); }

void ByteReader::verify_crc_trailer() {
  const std::size_t body = pos_;
  const std::uint32_t stored = u32();
  const std::uint32_t actual = crc32(data_.first(body));
  if (stored != actual) {
    throw ChecksumError("CRC32 mismatch: stored " + std::to_string(stored) +
                        ", computed " + std::to_string(actual));
  }
  if (remaining() != 0) {
    throw FormatError(std::to_string(remaining()) + " unexpected bytes after trailer");
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return data;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
  }
}

}  // namespace fusionette::io
