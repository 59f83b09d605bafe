#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "agmlab/errors.hpp"

namespace agmlab {

// LSB-first bit packing for compact messages.
class BitWriter {
 public:
  void put(std::uint64_t value, unsigned width) {
    for (unsigned i = 0; i < width; ++i) {
      if (bits_ % 8 == 0) bytes_.push_back(0);
      if ((value >> i) & 1u) bytes_.back() |= static_cast<std::uint8_t>(1u << (bits_ % 8));
      ++bits_;
    }
  }
  std::uint64_t bits() const { return bits_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint64_t get(unsigned width) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i, ++pos_) {
      if (pos_ / 8 >= bytes_.size()) throw ConfigError("bit stream truncated");
      if ((bytes_[pos_ / 8] >> (pos_ % 8)) & 1u) v |= std::uint64_t{1} << i;
    }
    return v;
  }
  std::uint64_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint64_t pos_ = 0;
};

}  // namespace agmlab
