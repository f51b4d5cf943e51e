#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dote/errors.hpp"
#include "dote/tensor.hpp"

namespace dote {

/// Keys cubic convolution kernel with a = -0.5.
inline double keys_cubic(double x) {
  constexpr double a = -0.5;
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

/// Half-sample symmetric reflection into [0, n).
inline std::size_t reflect_index(long long j, std::size_t n) {
  const auto period = static_cast<long long>(2 * n);
  long long m = j % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

namespace detail {

struct Taps {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

// Weights mapping `in_len` samples to `out_len` samples with pixel-center
// alignment. When shrinking, the kernel is stretched by 1/scale so it also
// acts as the anti-aliasing prefilter. Weights are normalized to sum to 1.
inline std::vector<Taps> resample_taps(std::size_t in_len, std::size_t out_len) {
  const double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
  const double stretch = scale < 1.0 ? scale : 1.0;
  const double half_width = 2.0 / stretch;
  std::vector<Taps> taps(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const auto lo = static_cast<long long>(std::floor(center - half_width));
    const auto hi = static_cast<long long>(std::ceil(center + half_width));
    double sum = 0.0;
    for (long long j = lo; j <= hi; ++j) {
      const double w = stretch * keys_cubic(stretch * (center - static_cast<double>(j)));
      if (w == 0.0) continue;
      taps[i].index.push_back(reflect_index(j, in_len));
      taps[i].weight.push_back(w);
      sum += w;
    }
    for (double& w : taps[i].weight) w /= sum;
  }
  return taps;
}

inline Tensor resample_axis(const Tensor& in, std::size_t axis, std::size_t out_len) {
  Dims out_dims = in.dims();
  out_dims[axis] = out_len;
  Tensor out(out_dims);
  const auto taps = resample_taps(in.dims()[axis], out_len);

  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < in.rank(); ++a) inner *= in.dims()[a];
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= in.dims()[a];
  const std::size_t in_len = in.dims()[axis];

  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < out_len; ++i)
      for (std::size_t r = 0; r < inner; ++r) {
        double acc = 0.0;
        for (std::size_t t = 0; t < taps[i].index.size(); ++t)
          acc += taps[i].weight[t] * in[(o * in_len + taps[i].index[t]) * inner + r];
        out[(o * out_len + i) * inner + r] = acc;
      }
  return out;
}

inline Tensor resample(const Tensor& in, const Dims& out_dims) {
  Tensor t = in;
  for (std::size_t a = 0; a < in.rank(); ++a)
    if (out_dims[a] != t.dims()[a]) t = resample_axis(t, a, out_dims[a]);
  return t;
}

}  // namespace detail

/// Bicubic anti-aliased downsampling by an integer factor on every axis.
inline Tensor sr_degrade(const Tensor& hr, std::size_t factor) {
  if (factor == 0) throw InvalidInput("sr_degrade: factor must be positive");
  if (!hr.is_finite()) throw InvalidInput("sr_degrade: non-finite input");
  Dims out = hr.dims();
  for (auto& e : out) {
    if (e % factor != 0)
      throw DimensionError("sr_degrade: extent " + std::to_string(e) +
                           " not divisible by factor " + std::to_string(factor));
    e /= factor;
  }
  return detail::resample(hr, out);
}

/// Bicubic upsampling by an integer factor on every axis.
inline Tensor sr_upsample(const Tensor& lr, std::size_t factor) {
  if (factor == 0) throw InvalidInput("sr_upsample: factor must be positive");
  if (!lr.is_finite()) throw InvalidInput("sr_upsample: non-finite input");
  Dims out = lr.dims();
  for (auto& e : out) e *= factor;
  return detail::resample(lr, out);
}

}  // namespace dote
