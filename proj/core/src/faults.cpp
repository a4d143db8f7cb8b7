#include "pme/faults.hpp"

#include "pme/errors.hpp"

namespace pme {

FaultLabel FaultLabel::from_string(std::string_view s) {
  if (s.size() != 3)
    throw DataError("label must be three 0/1 digits, got '" + std::string(s) + "'");
  FaultLabel label;
  for (int d = 0; d < 3; ++d) {
    const char c = s[static_cast<std::size_t>(d)];
    if (c != '0' && c != '1')
      throw DataError("label must be three 0/1 digits, got '" + std::string(s) + "'");
    label.bits[static_cast<std::size_t>(d)] = static_cast<std::uint8_t>(c - '0');
  }
  return label;
}

FaultLabel FaultLabel::from_class_index(int index) {
  if (index < 0 || index >= kNumFaultClasses)
    throw DataError("fault class index out of range: " + std::to_string(index));
  FaultLabel label;
  label.bits[0] = static_cast<std::uint8_t>((index >> 2) & 1);
  label.bits[1] = static_cast<std::uint8_t>((index >> 1) & 1);
  label.bits[2] = static_cast<std::uint8_t>(index & 1);
  return label;
}

std::string FaultLabel::to_string() const {
  std::string s(3, '0');
  for (int d = 0; d < 3; ++d)
    s[static_cast<std::size_t>(d)] = static_cast<char>('0' + bits[static_cast<std::size_t>(d)]);
  return s;
}

}  // namespace pme
