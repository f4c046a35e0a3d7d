#pragma once

// Little-endian primitive IO shared by the sketch and checkpoint formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>

#include "emql/errors.hpp"

namespace emql::detail {

template <typename U>
void write_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U read_le(std::istream& in) {
  std::array<char, sizeof(U)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) throw FormatError("unexpected end of stream");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return value;
}

inline void write_f32s(std::ostream& out, std::span<const float> values) {
  for (float v : values) write_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

inline void read_f32s(std::istream& in, std::span<float> values) {
  for (float& v : values) v = std::bit_cast<float>(read_le<std::uint32_t>(in));
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4) || got[0] != magic[0] || got[1] != magic[1] ||
      got[2] != magic[2] || got[3] != magic[3]) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace emql::detail
