#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "dote/binary_io.hpp"
#include "dote/tensor.hpp"

namespace dote {

// Native container: "DOTE", u16 version, u8 rank, rank x u64 extents,
// then volume x f64 payload, everything little-endian, row-major.
inline constexpr std::uint16_t kTensorFormatVersion = 1;
inline constexpr char kTensorMagic[5] = "DOTE";
inline constexpr std::size_t kMaxContainerRank = 4;

struct RawArray {
  Dims dims;
  std::vector<double> data;
};

inline void write_container(std::ostream& os, const Dims& dims,
                            std::span<const double> data) {
  if (dims.empty() || dims.size() > kMaxContainerRank)
    throw DimensionError("container rank must be in [1, 4]");
  binary::write_magic(os, kTensorMagic);
  binary::write_le<std::uint16_t>(os, kTensorFormatVersion);
  binary::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(dims.size()));
  for (auto e : dims) binary::write_le<std::uint64_t>(os, e);
  for (double v : data) binary::write_f64(os, v);
  if (!os) throw FormatError("write failed");
}

inline RawArray read_container(std::istream& is) {
  binary::expect_magic(is, kTensorMagic);
  const auto version = binary::read_le<std::uint16_t>(is, "version");
  if (version != kTensorFormatVersion)
    throw FormatError("unsupported tensor format version " +
                      std::to_string(version));
  const auto rank = binary::read_le<std::uint8_t>(is, "rank");
  if (rank == 0 || rank > kMaxContainerRank)
    throw FormatError("invalid container rank " + std::to_string(rank));

  RawArray out;
  for (unsigned a = 0; a < rank; ++a) {
    const auto e = binary::read_le<std::uint64_t>(is, "extent");
    if (e == 0 || e > (std::uint64_t{1} << 32))
      throw FormatError("invalid extent " + std::to_string(e));
    out.dims.push_back(static_cast<std::size_t>(e));
  }
  const std::size_t n = volume(out.dims);
  out.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.data[i] = binary::read_f64(is, "payload");
  return out;
}

inline void write_tensor(std::ostream& os, const Tensor& t) {
  write_container(os, t.dims(), t.data());
}

inline Tensor read_tensor(std::istream& is) {
  RawArray raw = read_container(is);
  if (raw.dims.size() != 2 && raw.dims.size() != 3)
    throw FormatError("tensor file must have rank 2 or 3");
  return Tensor(std::move(raw.dims), std::move(raw.data));
}

inline void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace dote
