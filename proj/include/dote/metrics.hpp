#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dote/errors.hpp"
#include "dote/tensor.hpp"

namespace dote {

/// Peak signal-to-noise ratio in dB over the whole tensor. Identical inputs
/// give +infinity.
inline double psnr(const Tensor& a, const Tensor& b, double peak = 1.0) {
  if (a.dims() != b.dims()) throw DimensionError("psnr: dims mismatch");
  if (!(peak > 0)) throw InvalidInput("psnr: peak must be > 0");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.size());
  return 10.0 * std::log10(peak * peak / mse);
}

struct SsimParams {
  std::size_t window = 11;
  double stddev = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;

  void validate() const {
    if (window == 0 || window % 2 == 0) throw InvalidInput("ssim: window must be odd");
    if (!(stddev > 0)) throw InvalidInput("ssim: stddev must be > 0");
    if (!(k1 > 0) || !(k2 > 0)) throw InvalidInput("ssim: k1, k2 must be > 0");
    if (!(peak > 0)) throw InvalidInput("ssim: peak must be > 0");
  }
};

namespace detail {

inline std::vector<double> gaussian_window(const SsimParams& p) {
  const auto w = p.window;
  const double c = static_cast<double>(w / 2);
  std::vector<double> g(w * w);
  double sum = 0.0;
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double di = static_cast<double>(i) - c;
      const double dj = static_cast<double>(j) - c;
      g[i * w + j] = std::exp(-(di * di + dj * dj) / (2.0 * p.stddev * p.stddev));
      sum += g[i * w + j];
    }
  for (double& v : g) v /= sum;
  return g;
}

// Mean local SSIM over all fully-contained window positions of one slice.
// get(i, j) reads the slice values.
template <typename GetA, typename GetB>
double ssim_slice(std::size_t rows, std::size_t cols, GetA get_a, GetB get_b,
                  const SsimParams& p, const std::vector<double>& window) {
  const double c1 = (p.k1 * p.peak) * (p.k1 * p.peak);
  const double c2 = (p.k2 * p.peak) * (p.k2 * p.peak);
  const std::size_t w = p.window;
  double acc = 0.0;
  std::size_t positions = 0;
  for (std::size_t r = 0; r + w <= rows; ++r)
    for (std::size_t c = 0; c + w <= cols; ++c) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double g = window[i * w + j];
          const double a = get_a(r + i, c + j);
          const double b = get_b(r + i, c + j);
          ma += g * a;
          mb += g * b;
          saa += g * a * a;
          sbb += g * b * b;
          sab += g * a * b;
        }
      const double va = saa - ma * ma;
      const double vb = sbb - mb * mb;
      const double cov = sab - ma * mb;
      acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++positions;
    }
  return acc / static_cast<double>(positions);
}

}  // namespace detail

/// Mean SSIM with Gaussian weighting over fully-contained windows. For 3D
/// tensors the index is computed per slice along the last axis and averaged.
inline double ssim(const Tensor& a, const Tensor& b, const SsimParams& p = {}) {
  if (a.dims() != b.dims()) throw DimensionError("ssim: dims mismatch");
  p.validate();
  const Dims& d = a.dims();
  if (d[0] < p.window || d[1] < p.window)
    throw DimensionError("ssim: image smaller than the " +
                         std::to_string(p.window) + "-wide window");
  const auto window = detail::gaussian_window(p);

  if (a.rank() == 2) {
    return detail::ssim_slice(
        d[0], d[1], [&](std::size_t i, std::size_t j) { return a.at(i, j); },
        [&](std::size_t i, std::size_t j) { return b.at(i, j); }, p, window);
  }
  double acc = 0.0;
  for (std::size_t z = 0; z < d[2]; ++z)
    acc += detail::ssim_slice(
        d[0], d[1], [&](std::size_t i, std::size_t j) { return a.at(i, j, z); },
        [&](std::size_t i, std::size_t j) { return b.at(i, j, z); }, p, window);
  return acc / static_cast<double>(d[2]);
}

}  // namespace dote
