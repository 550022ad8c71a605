#include <pcomp/errors.hpp>
#include <pcomp/objective.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pcomp;

namespace {

StageInputs two_source_stage(std::vector<double> rbar = {0.0, 0.0})
{
  std::vector<ConditionalPMF> rows{{0, {0.5, 0.5}}, {0, {0.25, 0.75}}};
  return StageInputs::from_rows(rows, ConditionalPMF{0, {0.5, 0.5}}, rbar);
}

}  // namespace

TEST(KlDivergence, ZeroForEqualRows)
{
  const ConditionalPMF p{3, {0.1, 0.2, 0.7}};
  EXPECT_EQ(kl_divergence(p, p), ExtendedReal(0.0));
}

TEST(KlDivergence, MatchesDirectSummation)
{
  // 0.5 ln(0.5/0.25) + 0.5 ln(0.5/0.75) = 0.5 ln(4/3)
  const auto kl = kl_divergence(ConditionalPMF{0, {0.5, 0.5}}, ConditionalPMF{0, {0.25, 0.75}});
  EXPECT_NEAR(kl.value(), 0.5 * std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(kl.value(), 0.14384, 1e-5);
}

TEST(KlDivergence, InfiniteSentinelOnSupportFailure)
{
  const auto kl = kl_divergence(ConditionalPMF{0, {1.0, 0.0}}, ConditionalPMF{0, {0.0, 1.0}});
  EXPECT_TRUE(kl.is_infinite());
  EXPECT_THROW((void)kl.value(), NumericDomainError);
  EXPECT_TRUE(std::isinf(kl.as_double()));
  // Zero entries of p contribute nothing.
  const auto ok = kl_divergence(ConditionalPMF{0, {1.0, 0.0}}, ConditionalPMF{0, {0.5, 0.5}});
  EXPECT_NEAR(ok.value(), std::log(2.0), 1e-15);
}

TEST(KlDivergence, RejectsMisalignedRows)
{
  EXPECT_THROW(kl_divergence(ConditionalPMF{0, {1.0}}, ConditionalPMF{0, {0.5, 0.5}}), ParameterError);
  EXPECT_THROW(kl_divergence(ConditionalPMF{0, {1.0}}, ConditionalPMF{1, {1.0}}), ParameterError);
}

TEST(KlDivergence, NonNegativeOnRandomRows)
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const ConditionalPMF p{0, oracle::random_pmf(rng, n, true)};
    const ConditionalPMF q = smooth_row({0, oracle::random_pmf(rng, n, true)}, 0.05);
    EXPECT_GE(kl_divergence(p, q).value(), 0.0);
  }
}

//==============================================================================
TEST(StageCost, SingleSourceEqualToTarget)
{
  const ConditionalPMF row{0, {0.2, 0.3, 0.5}};
  std::vector<ConditionalPMF> rows{row};
  const Eigen::VectorXd alpha = Eigen::VectorXd::Ones(1);

  std::vector<double> zero(3, 0.0);
  EXPECT_NEAR(stage_cost(alpha, StageInputs::from_rows(rows, row, zero)).value(), 0.0, 1e-15);

  std::vector<double> constant(3, 1.7);
  EXPECT_NEAR(stage_cost(alpha, StageInputs::from_rows(rows, row, constant)).value(), -1.7, 1e-15);
}

TEST(StageCost, MatchesDirectSummationOracle)
{
  const auto inp = two_source_stage();
  const Eigen::VectorXd alpha = Eigen::VectorXd::Unit(2, 1);
  // KL([0.25, 0.75] || [0.5, 0.5]) = 0.25 ln 0.5 + 0.75 ln 1.5
  const double expected = oracle::direct_stage_cost({{0.5, 0.5}, {0.25, 0.75}}, {0.5, 0.5}, {0, 0}, {0, 1});
  EXPECT_NEAR(expected, 0.25 * std::log(0.5) + 0.75 * std::log(1.5), 1e-15);
  EXPECT_NEAR(expected, 0.13081, 1e-5);
  EXPECT_NEAR(stage_cost(alpha, inp).value(), expected, 1e-15);
}

TEST(StageCost, PropagatesInfiniteDivergence)
{
  std::vector<ConditionalPMF> rows{{0, {0.5, 0.5}}};
  std::vector<double> rbar{0.0, 0.0};
  const auto inp = StageInputs::from_rows(rows, ConditionalPMF{0, {1.0, 0.0}}, rbar);
  EXPECT_TRUE(stage_cost(Eigen::VectorXd::Ones(1), inp).is_infinite());
}

TEST(StageCost, ConvexAlongSimplexSegments)
{
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int S = 1 + static_cast<int>(rng() % 6);
    const int n = 1 + static_cast<int>(rng() % 10);
    const auto inp = oracle::random_stage(rng, S, n);
    const auto a = oracle::random_simplex(rng, S);
    const auto b = oracle::random_simplex(rng, S);
    const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double lhs = stage_cost(t * a + (1 - t) * b, inp).value();
    const double rhs = t * stage_cost(a, inp).value() + (1 - t) * stage_cost(b, inp).value();
    EXPECT_LE(lhs, rhs + 1e-10);
  }
}

//==============================================================================
TEST(StageGradient, VanishesWhenSourceMatchesTargetUnderUnitReward)
{
  const ConditionalPMF row{0, {0.2, 0.8}};
  std::vector<ConditionalPMF> rows{row};
  std::vector<double> ones{1.0, 1.0};
  const auto g = stage_gradient(Eigen::VectorXd::Ones(1), StageInputs::from_rows(rows, row, ones));
  EXPECT_NEAR(g[0], 0.0, 1e-15);
}

TEST(StageGradient, IdenticalSourcesGiveUnitComponents)
{
  const ConditionalPMF row{0, {0.2, 0.3, 0.5}};
  std::vector<ConditionalPMF> rows{row, row};
  std::vector<double> zero(3, 0.0);
  const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(2, 0.5);
  const auto g = stage_gradient(alpha, StageInputs::from_rows(rows, row, zero));
  EXPECT_NEAR(g[0], 1.0, 1e-15);
  EXPECT_NEAR(g[1], 1.0, 1e-15);
}

TEST(StageGradient, MatchesCentralDifferences)
{
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int S = 1 + static_cast<int>(rng() % 6);
    const int n = 1 + static_cast<int>(rng() % 10);
    const auto inp = oracle::random_stage(rng, S, n);
    const auto alpha = oracle::random_simplex(rng, S);
    const auto fd = oracle::central_gradient(
      [&](const Eigen::VectorXd& a) { return oracle::direct_stage_cost(inp, a); }, alpha, 1e-6);
    const auto g = stage_gradient(alpha, inp);
    EXPECT_LE((g - fd).norm() / std::max(1.0, fd.norm()), 1e-5);
  }
}

TEST(StageGradient, DomainErrorOnVanishingMixture)
{
  std::vector<ConditionalPMF> rows{{0, {1.0, 0.0}}, {0, {0.5, 0.5}}};
  std::vector<double> rbar{0.0, 0.0};
  const auto inp = StageInputs::from_rows(rows, ConditionalPMF{0, {0.5, 0.5}}, rbar);
  EXPECT_THROW(stage_gradient(Eigen::VectorXd::Unit(2, 0), inp), NumericDomainError);
  EXPECT_THROW(stage_hessian(Eigen::VectorXd::Unit(2, 0), inp), NumericDomainError);
  EXPECT_NO_THROW(stage_gradient(Eigen::VectorXd::Unit(2, 1), inp));
}

//==============================================================================
TEST(StageHessian, IdenticalSourcesGiveAllOnes)
{
  const ConditionalPMF row{0, {0.1, 0.6, 0.3}};
  std::vector<ConditionalPMF> rows{row, row, row};
  std::vector<double> zero(3, 0.0);
  const auto h = stage_hessian(Eigen::Vector3d(0.2, 0.3, 0.5), StageInputs::from_rows(rows, row, zero));
  EXPECT_LE((h - Eigen::MatrixXd::Ones(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(StageHessian, MatchesDirectEvaluation)
{
  // mix = [0.375, 0.625]; h11 = 0.25/0.375 + 0.25/0.625, h12 = 0.125/0.375 + 0.375/0.625,
  // h22 = 0.0625/0.375 + 0.5625/0.625
  const auto h = stage_hessian(Eigen::Vector2d(0.5, 0.5), two_source_stage());
  EXPECT_NEAR(h(0, 0), 0.25 / 0.375 + 0.25 / 0.625, 1e-14);
  EXPECT_NEAR(h(0, 1), 0.125 / 0.375 + 0.375 / 0.625, 1e-14);
  EXPECT_NEAR(h(1, 1), 0.0625 / 0.375 + 0.5625 / 0.625, 1e-14);
  EXPECT_NEAR(h(0, 0), 1.0667, 1e-4);
  EXPECT_NEAR(h(0, 1), 0.9333, 1e-4);
  EXPECT_DOUBLE_EQ(h(0, 1), h(1, 0));
}

TEST(StageHessian, PsdAndMatchesDifferencedGradient)
{
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int S = 1 + static_cast<int>(rng() % 6);
    const int n = 1 + static_cast<int>(rng() % 10);
    const auto inp = oracle::random_stage(rng, S, n);
    const auto alpha = oracle::random_simplex(rng, S);
    const auto h = stage_hessian(alpha, inp);
    EXPECT_TRUE(h.allFinite());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);

    const auto fd = oracle::central_jacobian(
      [&](const Eigen::VectorXd& a) { return stage_gradient(a, inp); }, alpha, 1e-6);
    EXPECT_LE((h - fd).norm() / std::max(1.0, fd.norm()), 1e-4);
  }
}
