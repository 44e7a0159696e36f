#include "pcal/cox.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

namespace {

using pcal::ProbVector;
using pcal::ThetaParams;

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), out.data());
    return out;
}

ProbVector random_simplex(std::mt19937_64& rng, int K)
{
    std::gamma_distribution<double> g(1.0, 1.0);
    Eigen::VectorXd v(K);
    for (int k = 0; k < K; ++k)
        v(k) = g(rng) + 1e-12;
    return ProbVector(Eigen::VectorXd(v / v.sum()));
}

TEST(ProbVector, RejectsInvalidInput)
{
    EXPECT_THROW(ProbVector(vec({1.0})), std::invalid_argument);
    EXPECT_THROW(ProbVector(vec({0.5, 0.6})), std::invalid_argument);
    EXPECT_THROW(ProbVector(vec({1.2, -0.2})), std::invalid_argument);
    EXPECT_THROW(ProbVector(vec({NAN, 0.5})), std::invalid_argument);
}

TEST(ProbVector, NormalizesWithinTolerance)
{
    const ProbVector p(vec({0.3, 0.7 + 5e-7}));
    EXPECT_NEAR(p.vector().sum(), 1.0, 1e-15);
}

TEST(ProbVector, ClampRenormalize)
{
    const auto p = pcal::clamp_renormalize<double>(vec({1.0, 0.0}), 1e-6);
    EXPECT_NEAR(p(0), 0.999999 / 1.0, 1e-12);
    EXPECT_NEAR(p(1), 0.000001, 1e-12);
    EXPECT_DOUBLE_EQ(p.vector().sum(), 1.0);
}

TEST(ThetaParams, Canonicalizes)
{
    const ThetaParams t(vec({-1.0, 0.0, 2.0}), 0.5);
    EXPECT_EQ(t.alpha().minCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(t.alpha()(1), 1.0);
    EXPECT_DOUBLE_EQ(t.alpha()(2), 3.0);
    EXPECT_THROW(ThetaParams(vec({0, 0}), 0.0), std::invalid_argument);
    EXPECT_THROW(ThetaParams(vec({0, 0}), -1.0), std::invalid_argument);
}

TEST(CoxApply, NeutralIsIdentity)
{
    const ProbVector p{0.8, 0.2};
    const auto out = pcal::cox_apply(p, ThetaParams::neutral(2));
    EXPECT_DOUBLE_EQ(out(0), 0.8);
    EXPECT_DOUBLE_EQ(out(1), 0.2);
}

TEST(CoxApply, SquareRootHalvesLogOdds)
{
    // odds 4:1 become 2:1
    const auto out = pcal::cox_apply(ProbVector{0.8, 0.2}, ThetaParams(vec({0, 0}), 0.5));
    EXPECT_NEAR(out(0), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(out(1), 1.0 / 3.0, 1e-12);
}

TEST(CoxApply, AlphaOffsetOnUniform)
{
    const auto out = pcal::cox_apply(ProbVector{0.5, 0.5}, ThetaParams(vec({1, 0}), 1.0));
    const double e = std::exp(1.0);
    EXPECT_NEAR(out(0), e / (1 + e), 1e-12);
    EXPECT_NEAR(out(1), 1 / (1 + e), 1e-12);
    EXPECT_NEAR(out(0), 0.731059, 1e-6);
    EXPECT_NEAR(out(1), 0.268941, 1e-6);
}

TEST(CoxApply, ZeroEntriesStayZero)
{
    const auto out = pcal::cox_apply(ProbVector{0.0, 0.25, 0.75}, ThetaParams(vec({3, 0, 1}), 2.0));
    EXPECT_EQ(out(0), 0.0);
    EXPECT_GT(out(1), 0.0);
    EXPECT_NEAR(out.vector().sum(), 1.0, 1e-12);
}

TEST(CoxApply, ExtremeBetaDoesNotOverflow)
{
    const auto out = pcal::cox_apply(ProbVector{1e-300, 1.0 - 1e-300}, ThetaParams(vec({0, 0}), 50.0));
    EXPECT_TRUE(std::isfinite(out(0)));
    EXPECT_NEAR(out(1), 1.0, 1e-15);
}

TEST(CoxApply, Properties)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3), b(0.1, 4);
    for (int trial = 0; trial < 500; ++trial) {
        const int K = 2 + trial % 5;
        const ProbVector p = random_simplex(rng, K);
        Eigen::VectorXd alpha(K);
        for (int k = 0; k < K; ++k)
            alpha(k) = u(rng);
        const double beta = b(rng);
        const ThetaParams theta(alpha, beta);
        const auto out = pcal::cox_apply(p, theta);

        // normalization
        EXPECT_NEAR(out.vector().sum(), 1.0, 1e-9);
        // shift invariance
        const ThetaParams shifted(Eigen::VectorXd(alpha.array() + u(rng)), beta);
        EXPECT_LE((pcal::cox_apply(p, shifted).vector() - out.vector()).cwiseAbs().maxCoeff(), 1e-12);
        // permutation equivariance: reverse the classes
        const ProbVector p_rev(Eigen::VectorXd(p.vector().reverse()));
        const ThetaParams t_rev(Eigen::VectorXd(alpha.reverse()), beta);
        EXPECT_LE((pcal::cox_apply(p_rev, t_rev).vector() - out.vector().reverse()).cwiseAbs().maxCoeff(),
                  1e-12);
        // identity
        EXPECT_LE((pcal::cox_apply(p, ThetaParams::neutral(K)).vector() - p.vector()).cwiseAbs().maxCoeff(),
                  1e-12);
    }
}

TEST(CoxApply, BetaMovesConfidenceInTheExpectedDirection)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.5 + 1e-6, 1.0 - 1e-6);
    for (int i = 0; i < 200; ++i) {
        const double p1 = u(rng);
        const ProbVector p{1 - p1, p1};
        const double shrunk = pcal::cox_apply(p, ThetaParams(vec({0, 0}), 0.5))(1);
        const double sharpened = pcal::cox_apply(p, ThetaParams(vec({0, 0}), 2.0))(1);
        EXPECT_LT(shrunk, p1);
        EXPECT_GT(shrunk, 0.5);
        EXPECT_GT(sharpened, p1);
    }
}

// Independent count: enumerate every candidate offset, canonicalize by
// subtracting the minimum, and count distinct (beta, alpha) pairs.
std::size_t enumerate_grid_size(int K, const std::vector<double>& betas)
{
    std::set<std::vector<double>> alphas;
    auto add = [&](std::vector<double> a) {
        const double m = *std::min_element(a.begin(), a.end());
        for (auto& x : a)
            x -= m;
        alphas.insert(a);
    };
    add(std::vector<double>(static_cast<std::size_t>(K), 0.0));
    for (int k = 0; k < K; ++k)
        for (double s : {1.0, -1.0}) {
            std::vector<double> a(static_cast<std::size_t>(K), 0.0);
            a[static_cast<std::size_t>(k)] = s;
            add(a);
        }
    return alphas.size() * betas.size();
}

TEST(DefaultGrid, SizesMatchEnumeration)
{
    const std::vector<double> betas{1, 0.5, 2};
    for (int K : {2, 3, 4, 10})
        EXPECT_EQ(pcal::build_default_grid(K).size(), enumerate_grid_size(K, betas)) << "K=" << K;
    EXPECT_EQ(pcal::build_default_grid(2).size(), 9u);
    EXPECT_EQ(pcal::build_default_grid(3).size(), 21u);
    EXPECT_EQ(pcal::build_default_grid(10).size(), 63u);
}

TEST(DefaultGrid, NeutralFirstAndDistinct)
{
    const auto grid = pcal::build_default_grid(4);
    EXPECT_TRUE(grid[0].is_neutral());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(grid[i].alpha().minCoeff(), 0.0);
        for (std::size_t j = 0; j < i; ++j)
            EXPECT_FALSE(grid[i].equivalent(grid[j]));
    }
}

TEST(DefaultGrid, Errors)
{
    EXPECT_THROW(pcal::build_default_grid(1), std::invalid_argument);
    EXPECT_THROW(pcal::build_default_grid<double>(2, {0.5, 2}), std::invalid_argument);
    EXPECT_THROW(pcal::build_default_grid<double>(2, {}), std::invalid_argument);
}

TEST(DefaultGrid, NeutralOnlyGrid)
{
    const auto grid = pcal::build_default_grid<double>(3, {1}, {});
    ASSERT_EQ(grid.size(), 1u);
    EXPECT_TRUE(grid[0].is_neutral());
}

TEST(ThetaGrid, RejectsBadMembers)
{
    EXPECT_THROW(pcal::ThetaGrid({ThetaParams(vec({0, 0}), 0.5)}), std::invalid_argument);
    EXPECT_THROW(pcal::ThetaGrid({ThetaParams::neutral(2), ThetaParams(vec({3, 3}), 1.0)}),
                 std::invalid_argument);
    EXPECT_THROW(pcal::ThetaGrid({ThetaParams::neutral(2), ThetaParams::neutral(3)}),
                 std::invalid_argument);
}

TEST(CoxApply, LongDoubleInstantiation)
{
    using LP = pcal::BasicProbVector<long double>;
    using LT = pcal::BasicThetaParams<long double>;
    pcal::Vec<long double> a(2);
    a << 0, 0;
    const auto out = pcal::cox_apply(LP{0.8L, 0.2L}, LT(a, 0.5L));
    EXPECT_NEAR(static_cast<double>(out(0)), 2.0 / 3.0, 1e-15);
}

}  // namespace
