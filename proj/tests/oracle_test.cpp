#include "pcal/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using pcal::JumperConfig;
using pcal::ProbVector;
using pcal::ThetaGrid;
using pcal::ThetaParams;

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), out.data());
    return out;
}

TEST(Oracle, NeutralGridReturnsBase)
{
    const JumperConfig c{0.5, {0.2}, ThetaGrid::neutral_only(2)};
    const std::vector<Eigen::VectorXd> probs{vec({0.7, 0.3}), vec({0.1, 0.9}), vec({0.5, 0.5})};
    const auto out = pcal::oracle::enumerate_predict(c, probs, {0, 1, 1}, 3);
    for (std::size_t t = 0; t < 3; ++t)
        EXPECT_LE((out[t] - probs[t]).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Oracle, WorkedOneStepExample)
{
    // Two length-1 trajectories from theta_0: stay (weight 0.25 * 1.5 = 0.375)
    // and move (0.25 * 0.5 = 0.125).
    const JumperConfig c{0.5, {0.5}, ThetaGrid({ThetaParams::neutral(2), ThetaParams(vec({0, 0}), 0.5)})};
    const auto out = pcal::oracle::enumerate_predict(c, {vec({0.8, 0.2})}, {0}, 1);
    EXPECT_NEAR(out[0](0), 0.783333, 1e-6);
    EXPECT_NEAR(out[0](1), 0.216667, 1e-6);
    EXPECT_NEAR(out[0](0), 0.5 * 0.8 + 0.375 * 0.8 + 0.125 * 2.0 / 3.0, 1e-15);
}

TEST(Oracle, PriorMassIsOne)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 30; ++trial) {
        const JumperConfig c{u(rng), {u(rng), u(rng) * 0.5}, pcal::build_default_grid<double>(2, {1, 0.5}, {1})};
        for (std::size_t n = 0; n <= 5; ++n)
            EXPECT_NEAR(pcal::oracle::prior_mass(c, n), 1.0, 1e-9);
    }
}

TEST(Oracle, GuardsInstanceSize)
{
    const JumperConfig c{0.5, {0.1, 0.01}, pcal::build_default_grid(10)};  // 63 members
    std::vector<Eigen::VectorXd> probs(5, Eigen::VectorXd::Constant(10, 0.1));
    EXPECT_THROW(pcal::oracle::enumerate_predict(c, probs, {0, 1, 2, 3, 4}, 5), std::length_error);
    EXPECT_THROW(pcal::oracle::enumerate_predict(c, probs, {0, 1, 2, 3, 4}, 6), std::invalid_argument);
}

TEST(Oracle, MatchesRecursionOnRandomInstances)
{
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const int K = 2 + inst % 2;
        const int n = 1 + inst % 6;
        const int n_theta = 1 + (inst / 2) % 4;
        std::vector<ThetaParams> thetas{ThetaParams::neutral(K)};
        while (static_cast<int>(thetas.size()) < n_theta) {
            Eigen::VectorXd a(K);
            for (int k = 0; k < K; ++k)
                a(k) = 4 * u(rng) - 2;
            thetas.emplace_back(a, 0.3 + 2.5 * u(rng));
        }
        JumperConfig c{0.05 + 0.9 * u(rng), {0.02 + 0.9 * u(rng)}, ThetaGrid(thetas)};
        if (inst % 3 == 0)
            c.jump_rates.push_back(c.jump_rates[0] * 0.5);

        std::vector<ProbVector> probs;
        std::vector<Eigen::VectorXd> raw;
        std::vector<int> labels;
        for (int t = 0; t < n; ++t) {
            Eigen::VectorXd v(K);
            for (int k = 0; k < K; ++k)
                v(k) = 0.05 + u(rng);
            probs.emplace_back(Eigen::VectorXd(v / v.sum()));
            raw.push_back(probs.back().vector());
            labels.push_back(static_cast<int>(u(rng) * K) % K);
        }
        const auto engine = pcal::process_stream(c, probs, labels);
        const auto brute = pcal::oracle::enumerate_predict(c, raw, labels, static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t)
            worst = std::max(worst, (engine.outcomes[static_cast<std::size_t>(t)].protected_p.vector() -
                                     brute[static_cast<std::size_t>(t)]).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Oracle, LongDoubleAgreesWithDouble)
{
    using LJ = pcal::BasicJumperConfig<long double>;
    using LT = pcal::BasicThetaParams<long double>;
    pcal::Vec<long double> a(2);
    a << 1, 0;
    const LJ c{0.5L, {0.3L}, pcal::BasicThetaGrid<long double>({LT::neutral(2), LT(a, 2.0L)})};
    pcal::Vec<long double> p(2);
    p << 0.6L, 0.4L;
    const auto out = pcal::oracle::enumerate_predict<long double>(c, {p, p, p}, {0, 1, 1}, 3);

    const JumperConfig cd{0.5, {0.3}, ThetaGrid({ThetaParams::neutral(2), ThetaParams(vec({1, 0}), 2.0)})};
    const std::vector<ProbVector> pd(3, ProbVector{0.6, 0.4});
    const auto run = pcal::process_stream(cd, pd, {0, 1, 1});
    for (std::size_t t = 0; t < 3; ++t)
        EXPECT_NEAR(static_cast<double>(out[t](0)), run.outcomes[t].protected_p(0), 1e-12);
}

}  // namespace
