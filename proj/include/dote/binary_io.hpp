#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "dote/errors.hpp"

namespace dote::binary {

// Little-endian scalar serialization regardless of host byte order.

template <typename T>
  requires std::is_integral_v<T>
void write_le(std::ostream& os, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFFu);
  os.write(bytes.data(), bytes.size());
}

inline void write_f64(std::ostream& os, double value) {
  write_le(os, std::bit_cast<std::uint64_t>(value));
}

template <typename T>
  requires std::is_integral_v<T>
T read_le(std::istream& is, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (is.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw FormatError(std::string("truncated input while reading ") + what);
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    u |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
  return static_cast<T>(u);
}

inline double read_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(read_le<std::uint64_t>(is, what));
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) {
  os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char got[4] = {};
  is.read(got, 4);
  if (is.gcount() != 4 || std::memcmp(got, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected \"") + magic + "\"");
}

}  // namespace dote::binary
