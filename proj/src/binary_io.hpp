#pragma once

// Little-endian helpers shared by the EMB1 and LAY1 codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "semspace/error.hpp"

namespace semspace::detail {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void put(T v) {
    bytes(&v, sizeof(T));
  }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const unsigned char> data, std::string what) : data_(data), what_(std::move(what)) {}

  template <typename T>
  T get(const char* field) {
    need(sizeof(T), field);
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string string(std::size_t n, const char* field) {
    need(n, field);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void floats(float* out, std::size_t n, const char* field) {
    need(n * sizeof(float), field);
    std::memcpy(out, data_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n, const char* field) {
    if (data_.size() - pos_ < n) {
      throw FormatError(what_ + ": truncated " + field + " at byte offset " + std::to_string(pos_) + " (need " +
                        std::to_string(n) + " bytes, " + std::to_string(data_.size() - pos_) + " left)");
    }
  }

  std::span<const unsigned char> data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path.string() + ": write failed");
}

}  // namespace semspace::detail
