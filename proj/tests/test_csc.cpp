#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace dote;
using dote::testing::direct_circular_convolve;
using dote::testing::direct_correlate;
using dote::testing::ista;
using dote::testing::oracle_objective;
using dote::testing::random_stack;
using dote::testing::random_tensor;

namespace {

FilterBank random_bank(std::size_t count, std::size_t support, std::mt19937_64& rng) {
  return FilterBank::random(count, support, 2, rng);
}

// Dense operator A (N x KN) with A vec(S) = vec(sum_k f_k * S_k).
Eigen::MatrixXd dense_synthesis(const FilterBank& bank, const Dims& dims) {
  const std::size_t n = volume(dims), count = bank.count();
  Eigen::MatrixXd a(n, count * n);
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t p = 0; p < n; ++p) {
      Tensor delta(dims);
      delta[p] = 1.0;
      const Tensor col = direct_circular_convolve(delta, bank[k]);
      for (std::size_t q = 0; q < n; ++q) a(q, k * n + p) = col[q];
    }
  return a;
}

// mix acting across channels, as a KN x KN matrix on channel-major vectors.
Eigen::MatrixXd dense_mix(const Eigen::MatrixXd& mix, std::size_t n) {
  return Eigen::kroneckerProduct(mix, Eigen::MatrixXd::Identity(n, n));
}

Eigen::VectorXd flat(const FeatureMapStack& s) {
  Eigen::VectorXd v(s.count() * s.voxels());
  for (std::size_t k = 0; k < s.count(); ++k)
    for (std::size_t p = 0; p < s.voxels(); ++p) v(k * s.voxels() + p) = s[k][p];
  return v;
}

Eigen::VectorXd flat(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data().data(), t.size());
}

SolverConfig tight(std::size_t iterations = 5000) {
  SolverConfig cfg;
  cfg.max_inner = iterations;
  cfg.tol = 1e-12;
  return cfg;
}

}  // namespace

TEST(Csc, SoftThresholdAndProjection) {
  EXPECT_EQ(soft_threshold(5.0, 2.0), 3.0);
  EXPECT_EQ(soft_threshold(-1.0, 2.0), 0.0);
  EXPECT_EQ(soft_threshold(-4.0, 1.5), -2.5);
  EXPECT_EQ(soft_threshold(0.7, 0.0), 0.7);
  EXPECT_THROW(soft_threshold(1.0, -1.0), InvalidInput);

  Tensor f = Tensor::filled(Dims{2, 2}, 0.25);  // norm 0.5
  EXPECT_EQ(project_unit_ball(f).values(), f.values());
  Tensor g = Tensor::filled(Dims{2, 2}, 2.0);  // norm 4
  const Tensor pg = project_unit_ball(g);
  EXPECT_NEAR(pg.norm(), 1.0, 1e-15);
  EXPECT_EQ(project_unit_ball(pg).values(), pg.values());
}

TEST(Csc, ObjectiveMatchesDirectEvaluation) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(Dims{8, 8}, rng);
  const FilterBank bank = random_bank(2, 3, rng);
  const FeatureMapStack s = random_stack(2, Dims{8, 8}, rng);
  const double got = csc_objective(x, bank, s, 0.3);
  const double want = oracle_objective(x, bank, {}, 0.3, s);
  EXPECT_NEAR(got, want, 1e-10 * std::abs(want));

  EXPECT_EQ(csc_objective(Tensor(Dims{8, 8}), bank, FeatureMapStack::zeros(2, Dims{8, 8}), 1.0), 0.0);
  EXPECT_NEAR(csc_objective(x, bank, FeatureMapStack::zeros(2, Dims{8, 8}), 1.0),
              0.5 * x.squared_norm(), 1e-12);
}

TEST(Csc, SpectralStepMatchesDenseNormalEquations) {
  std::mt19937_64 rng(2);
  for (std::size_t count : {1u, 2u, 3u}) {
    const Dims dims{7, 8};
    const std::size_t n = volume(dims);
    const Tensor x = random_tensor(dims, rng);
    const FilterBank bank = random_bank(count, 3, rng);
    const auto target = random_stack(count, dims, rng);
    std::vector<CouplingTerm> couplings;
    couplings.push_back({Eigen::MatrixXd::Random(count, count), random_stack(count, dims, rng), 0.7});
    couplings.push_back({Eigen::MatrixXd::Identity(count, count), random_stack(count, dims, rng), 0.2});
    const double sigma = 0.9;

    const Eigen::MatrixXd a = dense_synthesis(bank, dims);
    Eigen::MatrixXd h = a.transpose() * a + sigma * Eigen::MatrixXd::Identity(count * n, count * n);
    Eigen::VectorXd rhs = a.transpose() * flat(x) + sigma * flat(target);
    for (const auto& c : couplings) {
      const Eigen::MatrixXd m = dense_mix(c.mix, n);
      h += 2.0 * c.weight * m.transpose() * m;
      rhs += 2.0 * c.weight * m.transpose() * flat(c.target);
    }
    const Eigen::VectorXd want = h.ldlt().solve(rhs);
    const auto got = spectral_map_step(x, bank, couplings, sigma, target);
    EXPECT_LT((flat(got) - want).norm() / want.norm(), 1e-8) << "K=" << count;
  }
}

TEST(Csc, ZeroImageGivesZeroMaps) {
  std::mt19937_64 rng(3);
  const FilterBank bank = random_bank(2, 3, rng);
  SolverConfig cfg;
  cfg.max_inner = 1;
  const auto r = infer_feature_maps(Tensor(Dims{8, 8}), bank, 0.1, cfg);
  EXPECT_EQ(r.maps.squared_norm(), 0.0);
}

TEST(Csc, LambdaAboveLambdaMaxGivesZeroMaps) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(Dims{8, 8}, rng);
  const FilterBank bank = random_bank(2, 3, rng);
  double lambda_max = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const Tensor c = direct_correlate(x, bank[k]);
    for (double v : c.values()) lambda_max = std::max(lambda_max, std::abs(v));
  }
  const SolverConfig cfg = tight(2000);
  EXPECT_EQ(infer_feature_maps(x, bank, lambda_max * 1.001, cfg).maps.squared_norm(), 0.0);
  EXPECT_GT(infer_feature_maps(x, bank, lambda_max * 0.9, cfg).maps.squared_norm(), 0.0);
}

TEST(Csc, InferenceReachesIstaOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor x = random_tensor(Dims{8, 8}, rng);
    const FilterBank bank = random_bank(2, 3, rng);
    const double lambda = 0.1;
    const auto oracle = ista(x, bank, {}, lambda, 2000);
    const auto got = infer_feature_maps(x, bank, lambda, tight());
    EXPECT_LE(csc_objective(x, bank, got.maps, lambda),
              oracle_objective(x, bank, {}, lambda, oracle) + 1e-6);
  }
}

TEST(Csc, CoupledSolveReachesIstaOracle) {
  std::mt19937_64 rng(6);
  const Dims dims{8, 8};
  const Tensor x = random_tensor(dims, rng);
  const FilterBank bank = random_bank(2, 3, rng);
  const ChannelMap w(Eigen::MatrixXd::Random(2, 2) + 2.0 * Eigen::MatrixXd::Identity(2, 2));
  const auto other = random_stack(2, dims, rng);
  const double lambda = 0.05, beta = 0.3;
  std::vector<CouplingTerm> couplings{{w.matrix(), other, beta}};
  const auto oracle = ista(x, bank, couplings, lambda, 2000);
  const auto got = update_feature_maps_dual(x, bank, other, w, CouplingDirection::primal,
                                            lambda, beta, tight());
  EXPECT_LE(oracle_objective(x, bank, couplings, lambda, got.maps),
            oracle_objective(x, bank, couplings, lambda, oracle) + 1e-6);
}

TEST(Csc, CoupledSolveMatchesRestrictedQuadratic) {
  // With the support and signs of the converged U fixed, the l1 term is
  // linear and the optimum solves a dense linear system on that support.
  std::mt19937_64 rng(7);
  const Dims dims{8, 8};
  const std::size_t n = volume(dims), count = 2;
  const Tensor x = random_tensor(dims, rng);
  const FilterBank bank = random_bank(count, 3, rng);
  const ChannelMap w(Eigen::MatrixXd::Random(2, 2) + 2.0 * Eigen::MatrixXd::Identity(2, 2));
  const auto other = random_stack(count, dims, rng);
  const double lambda = 0.05, beta = 0.3;

  const auto got = update_feature_maps_dual(x, bank, other, w, CouplingDirection::dual,
                                            lambda, beta, tight(20000));
  ASSERT_TRUE(got.trace.converged);
  const Eigen::MatrixXd mix = w.inverse();

  const Eigen::MatrixXd a = dense_synthesis(bank, dims);
  const Eigen::MatrixXd m = dense_mix(mix, n);
  const Eigen::MatrixXd h = a.transpose() * a + 2.0 * beta * m.transpose() * m;
  const Eigen::VectorXd b = a.transpose() * flat(x) + 2.0 * beta * m.transpose() * flat(other);
  const Eigen::VectorXd u = flat(got.maps);
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u(i) != 0.0) support.push_back(i);
  ASSERT_FALSE(support.empty());
  const auto p = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd hp(p, p);
  Eigen::VectorXd bp(p);
  for (Eigen::Index r = 0; r < p; ++r) {
    bp(r) = b(support[r]) - lambda * (u(support[r]) > 0 ? 1.0 : -1.0);
    for (Eigen::Index c = 0; c < p; ++c) hp(r, c) = h(support[r], support[c]);
  }
  const Eigen::VectorXd sp = hp.ldlt().solve(bp);
  for (Eigen::Index r = 0; r < p; ++r) EXPECT_NEAR(u(support[r]), sp(r), 1e-6);
}

TEST(Csc, ZeroBetaMatchesPlainInference) {
  std::mt19937_64 rng(8);
  const Dims dims{8, 8};
  const Tensor x = random_tensor(dims, rng);
  const FilterBank bank = random_bank(2, 3, rng);
  const auto other = random_stack(2, dims, rng);
  SolverConfig cfg;
  const auto a = infer_feature_maps(x, bank, 0.1, cfg);
  const auto b = update_feature_maps_dual(x, bank, other, ChannelMap::identity(2),
                                          CouplingDirection::primal, 0.1, 0.0, cfg);
  EXPECT_EQ(flat(a.maps), flat(b.maps));
}

TEST(Csc, DominantCouplingPullsToOther) {
  std::mt19937_64 rng(9);
  const Dims dims{8, 8};
  const Tensor x = random_tensor(dims, rng);
  const FilterBank bank = random_bank(2, 3, rng);
  const auto other = random_stack(2, dims, rng);
  const auto r = update_feature_maps_dual(x, bank, other, ChannelMap::identity(2),
                                          CouplingDirection::primal, 0.0, 1e6, SolverConfig{});
  EXPECT_LT((r.maps - other).norm() / other.norm(), 1e-3);
}

TEST(Csc, ObjectiveTraceBoundedViolationAfterThirdIteration) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = random_tensor(Dims{12, 12}, rng, 0.0, 1.0);
    const FilterBank bank = random_bank(4, 5, rng);
    SolverConfig cfg;
    cfg.max_inner = 200;
    cfg.tol = 0.0;
    const auto r = infer_feature_maps(x, bank, 0.05, cfg);
    const auto& rows = r.trace.rows;
    for (std::size_t i = 3; i < rows.size(); ++i)
      EXPECT_LE(rows[i].objective, rows[i - 1].objective + 1e-8) << "iteration " << rows[i].iteration;
  }
}

TEST(Csc, FeasibilityAtConvergence) {
  std::mt19937_64 rng(11);
  const Tensor x = random_tensor(Dims{8, 8}, rng);
  const FilterBank bank = random_bank(2, 3, rng);
  SolverConfig cfg = tight(5000);
  cfg.tol = 1e-6;
  const auto r = infer_feature_maps(x, bank, 0.1, cfg);
  ASSERT_TRUE(r.trace.converged);
  EXPECT_LT(r.trace.rows.back().primal_residual, cfg.tol);
}

TEST(Csc, DeltaMapsRecoverEmbeddedKernel) {
  std::mt19937_64 rng(12);
  const Dims dims{8, 8};
  Tensor kernel = random_tensor(Dims{3, 3}, rng);
  kernel *= 0.5 / kernel.norm();  // interior of the unit ball
  const Tensor x = embed_kernel(kernel, dims);
  auto maps = FeatureMapStack::zeros(2, dims);
  maps[1].at(0, 0) = 1.0;
  const std::vector<Tensor> images{x};
  const std::vector<FeatureMapStack> stacks{maps};
  SolverConfig cfg = tight(500);
  const FilterBank got = update_filters(images, stacks, FilterBank::random(2, 3, 2, rng), cfg);
  for (std::size_t i = 0; i < kernel.size(); ++i) EXPECT_NEAR(got[1][i], kernel[i], 1e-6);

  // A kernel outside the ball comes back projected.
  Tensor big = kernel;
  big *= 6.0;
  const std::vector<Tensor> images2{embed_kernel(big, dims)};
  const FilterBank got2 = update_filters(images2, stacks, FilterBank::random(2, 3, 2, rng), cfg);
  const Tensor want = project_unit_ball(big);
  for (std::size_t i = 0; i < kernel.size(); ++i) EXPECT_NEAR(got2[1][i], want[i], 1e-6);
}

TEST(Csc, ZeroImagesGiveZeroFilters) {
  std::mt19937_64 rng(13);
  const Dims dims{8, 8};
  const std::vector<Tensor> images{Tensor(dims), Tensor(dims)};
  const std::vector<FeatureMapStack> stacks{random_stack(2, dims, rng), random_stack(2, dims, rng)};
  const FilterBank got = update_filters(images, stacks, FilterBank::random(2, 3, 2, rng), tight(500));
  for (std::size_t k = 0; k < 2; ++k) EXPECT_LT(got[k].norm(), 1e-6);
}

TEST(Csc, FilterUpdateDescendsAndStaysInBall) {
  std::mt19937_64 rng(14);
  const Dims dims{8, 8};
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<Tensor> images{random_tensor(dims, rng), random_tensor(dims, rng)};
    const std::vector<FeatureMapStack> stacks{random_stack(2, dims, rng), random_stack(2, dims, rng)};
    const FilterBank init = FilterBank::random(2, 3, 2, rng);
    const FilterBank got = update_filters(images, stacks, init, SolverConfig{});
    EXPECT_LE(filter_objective(images, stacks, got), filter_objective(images, stacks, init));
    for (std::size_t k = 0; k < 2; ++k) EXPECT_LE(got[k].norm(), 1.0 + kUnitBallSlack);
  }
}

TEST(Csc, RejectsBadInputs) {
  std::mt19937_64 rng(15);
  const FilterBank bank = random_bank(2, 5, rng);
  EXPECT_THROW(infer_feature_maps(Tensor(Dims{4, 8}), bank, 0.1, SolverConfig{}), DimensionError);
  EXPECT_THROW(infer_feature_maps(Tensor(Dims{8, 8}), bank, -0.1, SolverConfig{}), InvalidInput);
  const std::vector<Tensor> none;
  const std::vector<FeatureMapStack> no_maps;
  EXPECT_THROW(update_filters(none, no_maps, bank, SolverConfig{}), InvalidInput);
}
