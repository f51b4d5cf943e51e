#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "dote/binary_io.hpp"
#include "dote/tensor_io.hpp"
#include "dote/trainer.hpp"

namespace dote {

// Filter bank file: the tensor container with extents (K, d, d[, d]).
inline void write_filter_bank(std::ostream& os, const FilterBank& bank) {
  Dims dims{bank.count()};
  dims.insert(dims.end(), bank.filter_dims().begin(), bank.filter_dims().end());
  std::vector<double> payload;
  payload.reserve(volume(dims));
  for (const auto& f : bank.filters())
    payload.insert(payload.end(), f.values().begin(), f.values().end());
  write_container(os, dims, payload);
}

inline FilterBank read_filter_bank(std::istream& is) {
  RawArray raw = read_container(is);
  if (raw.dims.size() != 3 && raw.dims.size() != 4)
    throw FormatError("filter bank container must have rank 3 or 4");
  const std::size_t count = raw.dims.front();
  const Dims fdims(raw.dims.begin() + 1, raw.dims.end());
  const std::size_t per = volume(fdims);
  std::vector<Tensor> filters;
  for (std::size_t k = 0; k < count; ++k)
    filters.emplace_back(fdims, std::vector<double>(raw.data.begin() + k * per,
                                                    raw.data.begin() + (k + 1) * per));
  return FilterBank(std::move(filters));
}

// Model file layout, little-endian:
//   "DOTM" u16 version
//   u32 K, u32 d, u8 D, u8 rank, rank x u64 training extents
//   config: f64 lambda beta gamma sigma tol, u32 max_outer max_inner,
//           u64 seed, u8 dual_enabled
//   Fx bank container, Fy bank container
//   f64 ridge, K*K f64 W (row-major)
inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[5] = "DOTM";

inline void write_model(std::ostream& os, const DoteModel& model) {
  model.check_consistency();
  using namespace binary;
  const auto& cfg = model.config;
  write_magic(os, kModelMagic);
  write_le<std::uint16_t>(os, kModelFormatVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.fx.count()));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.fx.support()));
  write_le<std::uint8_t>(os, static_cast<std::uint8_t>(model.fx.rank()));
  write_le<std::uint8_t>(os, static_cast<std::uint8_t>(model.training_dims.size()));
  for (auto e : model.training_dims) write_le<std::uint64_t>(os, e);
  for (double v : {cfg.lambda, cfg.beta, cfg.gamma, cfg.sigma, cfg.tol}) write_f64(os, v);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cfg.max_outer));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(cfg.max_inner));
  write_le<std::uint64_t>(os, cfg.seed);
  write_le<std::uint8_t>(os, cfg.dual_enabled ? 1 : 0);
  write_filter_bank(os, model.fx);
  write_filter_bank(os, model.fy);
  write_f64(os, model.mapping.ridge());
  const auto& w = model.mapping.matrix();
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) write_f64(os, w(r, c));
  if (!os) throw FormatError("model write failed");
}

inline DoteModel read_model(std::istream& is) {
  using namespace binary;
  expect_magic(is, kModelMagic);
  if (const auto v = read_le<std::uint16_t>(is, "version"); v != kModelFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(v));
  DoteModel model;
  const auto count = read_le<std::uint32_t>(is, "K");
  const auto support = read_le<std::uint32_t>(is, "d");
  const auto rank = read_le<std::uint8_t>(is, "D");
  const auto dims_rank = read_le<std::uint8_t>(is, "training rank");
  if (dims_rank > kMaxContainerRank) throw FormatError("invalid training rank");
  for (unsigned a = 0; a < dims_rank; ++a)
    model.training_dims.push_back(
        static_cast<std::size_t>(read_le<std::uint64_t>(is, "training extent")));

  auto& cfg = model.config;
  cfg.lambda = read_f64(is, "lambda");
  cfg.beta = read_f64(is, "beta");
  cfg.gamma = read_f64(is, "gamma");
  cfg.sigma = read_f64(is, "sigma");
  cfg.tol = read_f64(is, "tol");
  cfg.max_outer = read_le<std::uint32_t>(is, "max_outer");
  cfg.max_inner = read_le<std::uint32_t>(is, "max_inner");
  cfg.seed = read_le<std::uint64_t>(is, "seed");
  cfg.dual_enabled = read_le<std::uint8_t>(is, "dual_enabled") != 0;
  cfg.num_filters = count;
  cfg.support = support;

  model.fx = read_filter_bank(is);
  model.fy = read_filter_bank(is);
  if (model.fx.count() != count || model.fx.support() != support ||
      model.fx.rank() != rank)
    throw FormatError("model header disagrees with the filter payload");

  const double ridge = read_f64(is, "ridge");
  Eigen::MatrixXd w(count, count);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = read_f64(is, "W");
  model.mapping = ChannelMap(std::move(w), ridge);
  model.check_consistency();
  cfg.validate();
  return model;
}

inline void save_model(const std::filesystem::path& path, const DoteModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_model(os, model);
}

inline DoteModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_model(is);
}

}  // namespace dote
