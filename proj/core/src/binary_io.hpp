#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "covfmm/errors.hpp"

// Raw little-endian container plumbing shared by the covariance and plan
// serializers.  Not installed.

namespace covfmm::detail {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw SerializationError("cannot open '" + path + "' for writing");
  }

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void magic(const char (&tag)[9]) { bytes(tag, 8); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }

  void finish() {
    out_.flush();
    if (!out_) throw SerializationError("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw SerializationError("cannot open '" + path + "' for reading");
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw SerializationError("truncated container '" + path_ + "'");
  }
  void expect_magic(const char (&tag)[9]) {
    char got[8];
    bytes(got, 8);
    if (std::memcmp(got, tag, 8) != 0)
      throw SerializationError("'" + path_ + "' is not a " + std::string(tag, 8) +
                               " container");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  bool at_end() { return in_.peek() == std::ifstream::traits_type::eof(); }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace covfmm::detail
