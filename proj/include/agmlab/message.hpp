#pragma once

#include <cstdint>
#include <vector>

namespace agmlab {

struct Message {
  std::vector<std::uint8_t> bytes;
  // Meaningful bits; bytes.size() == ceil(bits / 8).
  std::uint64_t bits = 0;
  friend bool operator==(const Message&, const Message&) = default;
};

}  // namespace agmlab
