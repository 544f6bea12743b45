#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "ctgraph/error.hpp"

namespace ctgraph::io {

// Little-endian byte sink. Values are encoded byte by byte so the layout does
// not depend on host endianness.
class ByteWriter {
 public:
  void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }

  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }

  void put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

  const std::vector<char>& bytes() const { return buf_; }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatErrc::kOpenFailed, path);
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw FormatError(FormatErrc::kWriteFailed, path);
  }

 private:
  std::vector<char> buf_;
};

// Cursor over an in-memory file. Running past the end raises `on_short`.
class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string path) : buf_(std::move(bytes)), path_(std::move(path)) {}

  static ByteReader load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrc::kOpenFailed, path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes), path);
  }

  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::string& path() const { return path_; }

  void need(std::size_t n, FormatErrc on_short) const {
    if (remaining() < n) throw FormatError(on_short, path_);
  }

  std::string get_bytes(std::size_t n, FormatErrc on_short) {
    need(n, on_short);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  std::uint8_t get_u8(FormatErrc on_short) {
    need(1, on_short);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }

  std::uint32_t get_u32(FormatErrc on_short) {
    need(4, on_short);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }

  std::uint64_t get_u64(FormatErrc on_short) {
    need(8, on_short);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }

  float get_f32(FormatErrc on_short) { return std::bit_cast<float>(get_u32(on_short)); }
  double get_f64(FormatErrc on_short) { return std::bit_cast<double>(get_u64(on_short)); }

 private:
  std::vector<char> buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace ctgraph::io
