#ifndef SEMMAP_SRC_BYTE_IO_H_
#define SEMMAP_SRC_BYTE_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semmap/error.h"

namespace semmap::internal {

static_assert(std::endian::native == std::endian::little,
              "file codecs assume a little-endian host");

class ByteWriter {
 public:
  void Bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v) { Raw(&v, sizeof v); }
  void U32(std::uint32_t v) { Raw(&v, sizeof v); }
  void F32(float v) { Raw(&v, sizeof v); }
  void F64(double v) { Raw(&v, sizeof v); }

  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  void Raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> out_;
};

// Reads fixed-width little-endian values; running past the end throws
// `truncated` with the given context.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, ErrorCode truncated,
             std::string context)
      : data_(data), truncated_(truncated), context_(std::move(context)) {}

  std::string_view Bytes(std::size_t n) {
    Need(n);
    std::string_view s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint8_t U8() { return Read<std::uint8_t>(); }
  std::uint16_t U16() { return Read<std::uint16_t>(); }
  std::uint32_t U32() { return Read<std::uint32_t>(); }
  float F32() { return Read<float>(); }
  double F64() { return Read<double>(); }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  template <typename T>
  T Read() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void Need(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw Error(truncated_, context_ + ": needed " + std::to_string(n) +
                                  " bytes at offset " + std::to_string(pos_) +
                                  ", " + std::to_string(data_.size() - pos_) +
                                  " left");
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  ErrorCode truncated_;
  std::string context_;
};

std::vector<std::uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path,
                    std::span<const std::uint8_t> bytes);

}  // namespace semmap::internal

#endif  // SEMMAP_SRC_BYTE_IO_H_
