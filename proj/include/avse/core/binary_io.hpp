#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "avse/core/error.hpp"

namespace avse::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

// Little-endian record writer over an ofstream.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot open for writing: " + path);
  }

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw DataError("write failed: " + path_);
  }
  void magic(std::string_view m) { bytes(m.data(), m.size()); }

  template <class T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    bytes(&v, sizeof v);
  }

  template <class T>
    requires std::is_arithmetic_v<T>
  void array(std::span<const T> v) {
    bytes(v.data(), v.size_bytes());
  }

  void string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  void close() {
    out_.close();
    if (!out_) throw DataError("close failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

// Reader that reports truncation as a DataError naming the file.
class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open for reading: " + path);
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("truncated file: " + path_);
  }

  void expect_magic(std::string_view m) {
    std::string got(m.size(), '\0');
    bytes(got.data(), got.size());
    if (got != m) throw DataError("bad magic in " + path_ + " (expected " + std::string(m) + ")");
  }

  template <class T>
    requires std::is_arithmetic_v<T>
  T get() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }

  template <class T>
    requires std::is_arithmetic_v<T>
  void array(std::span<T> v) {
    bytes(v.data(), v.size_bytes());
  }

  std::string string(std::size_t max_len = 1u << 24) {
    const auto n = get<std::uint32_t>();
    if (n > max_len) throw DataError("implausible string length in " + path_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace avse::io
