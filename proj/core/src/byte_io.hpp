#pragma once

// Little-endian encode/decode helpers for the binary formats. Not installed.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "dgd/error.hpp"

namespace dgd::detail {

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xFFU));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xFFU));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
  }

 private:
  std::vector<char> bytes_;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string what) : bytes_(std::move(bytes)), what_(std::move(what)) {}

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::string_view(bytes_.data() + pos_, m.size()) != m) {
      throw Error(Errc::BadMagic, what_ + ": expected magic '" + std::string(m) + "'");
    }
    pos_ += m.size();
  }
  void expect_version(std::uint32_t version) {
    const std::uint32_t v = u32();
    if (v != version) {
      throw Error(Errc::VersionMismatch, what_ + ": version " + std::to_string(v) + ", expected " +
                                             std::to_string(version));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

  /// Fails early (before any allocation) when fewer than `n` bytes remain.
  void require(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw Error(Errc::TruncatedFile, what_ + ": file is truncated");
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw Error(Errc::ParseError, what_ + ": " + std::to_string(bytes_.size() - pos_) + " trailing bytes");
    }
  }

 private:
  void need(std::size_t n) const { require(n); }

  std::vector<char> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace dgd::detail
