#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dote/dote.hpp"

namespace dote::testing {

/// Smooth periodic texture: a few low-frequency cosines plus Gaussian blobs,
/// min-max scaled to [0, 1].
inline Tensor texture(std::size_t n, std::mt19937_64& rng, double max_frequency = 4.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double pi = std::acos(-1.0);
  Tensor t(Dims{n, n});
  for (int c = 0; c < 4; ++c) {
    const double fx = std::floor(u(rng) * max_frequency);
    const double fy = std::floor(u(rng) * max_frequency);
    const double phase = u(rng) * 2.0 * pi;
    const double amp = u(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        t.at(i, j) += amp * std::cos(2.0 * pi * (fx * i + fy * j) / n + phase);
  }
  for (int b = 0; b < 3; ++b) {
    const double ci = u(rng) * n, cj = u(rng) * n;
    const double r = 1.0 + u(rng) * 2.0, amp = u(rng) * 2.0 - 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double d2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
        t.at(i, j) += amp * std::exp(-d2 / (2.0 * r * r));
      }
  }
  const double lo = t.min(), hi = t.max();
  for (double& v : t.values()) v = (v - lo) / (hi - lo);
  return t;
}

/// Centred [1 2 1]^2 / 16 blur with circular wrap, computed directly.
inline Tensor blur(const Tensor& x) {
  const double w[3] = {1.0, 2.0, 1.0};
  const std::size_t n = x.dims()[0], m = x.dims()[1];
  Tensor out(x.dims());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
          acc += w[di + 1] * w[dj + 1] / 16.0 *
                 x.at((i + n + di) % n, (j + m + dj) % m);
      out.at(i, j) = acc;
    }
  return out;
}

struct BlurSet {
  std::vector<Tensor> xs, ys;
};

/// The fixed-seed 16x16 blur dataset.
inline BlurSet blur_dataset(std::size_t pairs = 8, std::size_t n = 16,
                            std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  BlurSet s;
  for (std::size_t i = 0; i < pairs; ++i) {
    s.xs.push_back(texture(n, rng));
    s.ys.push_back(blur(s.xs.back()));
  }
  return s;
}

inline Tensor random_tensor(const Dims& dims, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(dims);
  for (double& v : t.values()) v = u(rng);
  return t;
}

inline FeatureMapStack random_stack(std::size_t count, const Dims& dims,
                                    std::mt19937_64& rng) {
  std::vector<Tensor> maps;
  for (std::size_t k = 0; k < count; ++k) maps.push_back(random_tensor(dims, rng));
  return FeatureMapStack(std::move(maps));
}

/// Direct spatial circular convolution with the kernel anchored at the origin.
inline Tensor direct_circular_convolve(const Tensor& x, const Tensor& k) {
  const std::size_t n = x.dims()[0], m = x.dims()[1];
  const std::size_t kn = k.dims()[0], km = k.dims()[1];
  Tensor out(x.dims());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < kn; ++a)
        for (std::size_t b = 0; b < km; ++b)
          acc += k.at(a, b) * x.at((i + n - a % n) % n, (j + m - b % m) % m);
      out.at(i, j) = acc;
    }
  return out;
}

/// Desk-scale hyperparameters for the 16x16 training instances. The
/// library defaults are tuned for K in the hundreds and full-size images;
/// at this scale they leave the maps nearly empty and W ridge-dominated.
inline SolverConfig desk_config() {
  SolverConfig cfg;
  cfg.lambda = 0.002;
  cfg.beta = 10.0;
  cfg.gamma = 0.001;
  cfg.sigma = 1.0;
  return cfg;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dote_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dote::testing
