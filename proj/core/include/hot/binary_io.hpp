// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian primitives shared by the HOTM / HOTQ / HOTA fixture formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string_view>

#include "hot/errors.hpp"

namespace hot::io {

inline void write_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

inline void write_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), b.size());
}

inline void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline std::uint8_t read_u8(std::istream& is) {
  char c = 0;
  if (!is.get(c)) throw DataError("unexpected end of stream");
  return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) throw DataError("unexpected end of stream");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float read_f32(std::istream& is) { return std::bit_cast<float>(read_u32(is)); }

inline void expect_magic(std::istream& is, std::string_view magic) {
  std::array<char, 4> got{};
  if (magic.size() != got.size() || !is.read(got.data(), got.size()) ||
      std::string_view(got.data(), got.size()) != magic) {
    throw DataError("bad magic, expected \"" + std::string(magic) + "\"");
  }
}

}  // namespace hot::io
