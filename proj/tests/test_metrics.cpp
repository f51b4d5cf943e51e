#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace dote;
using dote::testing::random_tensor;
using dote::testing::scripted_ssim;


TEST(Psnr, AnalyticCases) {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor(Dims{8, 8}, rng, 0.0, 255.0);
  Tensor b = a;
  for (double& v : b.values()) v += 1.0;
  EXPECT_NEAR(psnr(a, b, 255.0), 48.1308, 1e-3);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_THROW(psnr(a, Tensor(Dims{8, 9})), DimensionError);
}

TEST(Psnr, MatchesDirectMse) {
  std::mt19937_64 rng(2);
  const Tensor a = random_tensor(Dims{8, 8}, rng, 0.0, 1.0);
  const Tensor b = random_tensor(Dims{8, 8}, rng, 0.0, 1.0);
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= 64.0;
  EXPECT_NEAR(psnr(a, b), -10.0 * std::log10(mse), 1e-10);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
}

TEST(Psnr, DecreasesWithNoiseAmplitude) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor(Dims{16, 16}, rng, 0.0, 1.0);
  const Tensor noise = random_tensor(Dims{16, 16}, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.05, 0.2}) {
    Tensor b = noise;
    b *= amp;
    b += a;
    const double p = psnr(a, b);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Ssim, IdenticalIsExactlyOne) {
  std::mt19937_64 rng(4);
  const Tensor a = random_tensor(Dims{16, 16}, rng, 0.0, 1.0);
  EXPECT_EQ(ssim(a, a), 1.0);
}

TEST(Ssim, ConstantImagesAnalytic) {
  const double c = 0.3, d = 0.2, c1 = 0.01 * 0.01;
  const Tensor a = Tensor::filled(Dims{16, 16}, c);
  const Tensor b = Tensor::filled(Dims{16, 16}, c + d);
  EXPECT_NEAR(ssim(a, b), (2 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1), 1e-12);
}

TEST(Ssim, MatchesScriptedOracleAndIsSymmetric) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    const Tensor a = random_tensor(Dims{16, 16}, rng, 0.0, 1.0);
    const Tensor b = random_tensor(Dims{16, 16}, rng, 0.0, 1.0);
    EXPECT_NEAR(ssim(a, b), scripted_ssim(a, b), 1e-8);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  }
}

TEST(Ssim, LuminanceShiftLowersIndex) {
  std::mt19937_64 rng(6);
  const Tensor a = random_tensor(Dims{16, 16}, rng, 0.0, 0.8);
  Tensor b = a;
  for (double& v : b.values()) v += 0.1;
  EXPECT_LT(ssim(a, b), 1.0);
}

TEST(Ssim, VolumeIsSliceAverage) {
  std::mt19937_64 rng(7);
  const Tensor a = random_tensor(Dims{12, 12, 3}, rng, 0.0, 1.0);
  const Tensor b = random_tensor(Dims{12, 12, 3}, rng, 0.0, 1.0);
  double want = 0.0;
  for (std::size_t z = 0; z < 3; ++z) {
    Tensor sa(Dims{12, 12}), sb(Dims{12, 12});
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j) {
        sa.at(i, j) = a.at(i, j, z);
        sb.at(i, j) = b.at(i, j, z);
      }
    want += scripted_ssim(sa, sb) / 3.0;
  }
  EXPECT_NEAR(ssim(a, b), want, 1e-8);
}

TEST(Ssim, Errors) {
  EXPECT_THROW(ssim(Tensor(Dims{8, 8}), Tensor(Dims{8, 8})), DimensionError);
  EXPECT_THROW(ssim(Tensor(Dims{16, 16}), Tensor(Dims{16, 12})), DimensionError);
}
