#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace pme {

// Condition of the three substructures, one bit each: [x, y, z],
// 1 = fault present. [0,0,0] is the no-fault case.
struct FaultLabel {
  std::array<std::uint8_t, 3> bits{0, 0, 0};

  // Parses a three-digit string such as "101". Throws DataError otherwise.
  static FaultLabel from_string(std::string_view s);
  static FaultLabel from_class_index(int index);  // 0..7, bits of the index

  std::string to_string() const;
  int class_index() const { return bits[0] * 4 + bits[1] * 2 + bits[2]; }

  bool operator==(const FaultLabel&) const = default;
};

inline constexpr int kNumFaultClasses = 8;

}  // namespace pme
