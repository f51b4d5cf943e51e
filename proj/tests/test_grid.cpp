#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "support/synthetic.hpp"

using namespace dote;
using dote::testing::direct_circular_convolve;
using dote::testing::random_tensor;

namespace {

double rel_error(const Tensor& a, const Tensor& b) {
  Tensor d = a;
  d -= b;
  return d.norm() / std::max(b.norm(), 1e-300);
}

// Naive 2D DFT with the same sign and scaling as fft_forward.
SpectralTensor naive_dft(const Tensor& t) {
  const std::size_t n = t.dims()[0], m = t.dims()[1];
  const double pi = std::acos(-1.0);
  SpectralTensor out(t.dims());
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < m; ++v) {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
          acc += t.at(i, j) * std::polar(1.0, -2.0 * pi *
                                                  (double(u * i) / n + double(v * j) / m));
      out.at(u, v) = acc;
    }
  return out;
}

}  // namespace

TEST(Grid, ConvolutionMatchesDirectSpatial) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> ext(5, 16), ks(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims d{ext(rng), ext(rng)};
    const Dims kd{ks(rng), ks(rng)};
    const Tensor x = random_tensor(d, rng);
    const Tensor k = random_tensor(kd, rng);
    EXPECT_LT(rel_error(circular_convolve(x, k), direct_circular_convolve(x, k)), 1e-10);
  }
}

TEST(Grid, ForwardMatchesNaiveDft) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(Dims{6, 5}, rng);
  const SpectralTensor a = fft_forward(x);
  const SpectralTensor b = naive_dft(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-10);
}

TEST(Grid, RoundTripAndLinearity) {
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor(Dims{8, 12}, rng);
  const Tensor y = random_tensor(Dims{8, 12}, rng);
  EXPECT_LT(rel_error(fft_inverse(fft_forward(x)), x), 1e-12);

  Tensor combo = x;
  combo *= 2.0;
  Tensor y3 = y;
  y3 *= -3.0;
  combo += y3;
  const auto fc = fft_forward(combo), fx = fft_forward(x), fy = fft_forward(y);
  for (std::size_t i = 0; i < fc.size(); ++i)
    EXPECT_LT(std::abs(fc[i] - (2.0 * fx[i] - 3.0 * fy[i])), 1e-10);
}

TEST(Grid, Parseval) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor(Dims{7, 9}, rng);
  const auto f = fft_forward(x);
  EXPECT_NEAR(f.squared_norm() / static_cast<double>(x.size()), x.squared_norm(), 1e-10);
}

TEST(Grid, ShiftTheorem) {
  // Convolving with a unit impulse at (a, b) is a circular shift by (a, b).
  std::mt19937_64 rng(7);
  const Tensor x = random_tensor(Dims{9, 10}, rng);
  Tensor delta(Dims{3, 4});
  delta.at(2, 3) = 1.0;
  const Tensor y = circular_convolve(x, delta);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      EXPECT_NEAR(y.at(i, j), x.at((i + 9 - 2) % 9, (j + 10 - 3) % 10), 1e-12);
}

TEST(Grid, ThreeDimensionalConvolution) {
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor(Dims{6, 5, 4}, rng);
  Tensor delta(Dims{3, 3, 3});
  delta.at(1, 2, 1) = 1.0;
  const Tensor y = circular_convolve(x, delta);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 4; ++k)
        EXPECT_NEAR(y.at(i, j, k), x.at((i + 5) % 6, (j + 3) % 5, (k + 3) % 4), 1e-12);
}

TEST(Grid, EmbedCropRoundTrip) {
  std::mt19937_64 rng(9);
  const Tensor k = random_tensor(Dims{3, 5}, rng);
  const Tensor e = embed_kernel(k, Dims{8, 8});
  EXPECT_EQ(e.at(0, 0), k.at(0, 0));
  EXPECT_EQ(e.at(7, 7), 0.0);
  EXPECT_EQ(crop_kernel(e, k.dims()).values(), k.values());
  EXPECT_THROW(embed_kernel(k, Dims{2, 8}), DimensionError);
}

TEST(Grid, TensorIoRoundTripIsBitwise) {
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor(Dims{4, 3, 2}, rng);
  std::stringstream ss;
  write_tensor(ss, x);
  const Tensor y = read_tensor(ss);
  EXPECT_EQ(y.dims(), x.dims());
  EXPECT_EQ(y.values(), x.values());
}

TEST(Grid, TensorIoRejectsGarbage) {
  std::stringstream ss("not a tensor at all");
  EXPECT_THROW(read_tensor(ss), FormatError);
}
