#include "pcal/jumper.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
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

JumperConfig worked_example_config()
{
    return {0.5, {0.5}, ThetaGrid({ThetaParams::neutral(2), ThetaParams(vec({0, 0}), 0.5)})};
}

struct RandomStream {
    std::vector<ProbVector> probs;
    std::vector<int> labels;
};

RandomStream random_stream(std::mt19937_64& rng, int K, int n)
{
    std::gamma_distribution<double> g(0.7, 1.0);
    std::uniform_int_distribution<int> label(0, K - 1);
    RandomStream s;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v(K);
        for (int k = 0; k < K; ++k)
            v(k) = g(rng);
        s.probs.push_back(pcal::clamp_renormalize<double>(Eigen::VectorXd(v / v.sum()), 1e-6));
        s.labels.push_back(label(rng));
    }
    return s;
}

TEST(JumperInit, DefaultPrior)
{
    JumperConfig c;
    const auto s = pcal::init(c);
    EXPECT_EQ(s.P, 0.5);
    ASSERT_EQ(s.A.rows(), 3);
    ASSERT_EQ(s.A.cols(), 9);
    for (Eigen::Index j = 0; j < 3; ++j) {
        EXPECT_DOUBLE_EQ(s.A(j, 0), 1.0 / 6.0);
        EXPECT_EQ(s.A.row(j).tail(8).sum(), 0.0);
    }
    EXPECT_NEAR(s.total_mass(), 1.0, 1e-15);
}

TEST(JumperInit, DegenerateAndAsymmetricPrior)
{
    const auto s1 = pcal::init(JumperConfig{0.5, {0.1}, ThetaGrid::neutral_only(2)});
    EXPECT_EQ(s1.P, 0.5);
    EXPECT_EQ(s1.A(0, 0), 0.5);

    JumperConfig c2{0.9, {0.01, 0.001}, pcal::build_default_grid(2)};
    const auto s2 = pcal::init(c2);
    EXPECT_NEAR(s2.A(0, 0), 0.05, 1e-15);
    EXPECT_NEAR(s2.A(1, 0), 0.05, 1e-15);
}

TEST(JumperConfig, Validation)
{
    auto bad = [](double pi, std::vector<double> rates) {
        return JumperConfig{pi, std::move(rates), pcal::build_default_grid(2)};
    };
    EXPECT_THROW(bad(0.0, {0.1}).validate(), std::invalid_argument);
    EXPECT_THROW(bad(1.0, {0.1}).validate(), std::invalid_argument);
    EXPECT_THROW(bad(0.5, {}).validate(), std::invalid_argument);
    EXPECT_THROW(bad(0.5, {0.0}).validate(), std::invalid_argument);
    EXPECT_THROW(bad(0.5, {1.0}).validate(), std::invalid_argument);
    EXPECT_THROW(bad(0.5, {0.1, 0.1}).validate(), std::invalid_argument);
    EXPECT_NO_THROW(bad(0.5, {0.1, 0.2}).validate());
}

TEST(JumperStep, WorkedExample)
{
    const auto config = worked_example_config();
    const ProbVector p{0.8, 0.2};
    auto [prot, mixed] = pcal::predict(config, pcal::init(config), p);
    EXPECT_NEAR(mixed.state.A(0, 0), 0.375, 1e-15);
    EXPECT_NEAR(mixed.state.A(0, 1), 0.125, 1e-15);
    EXPECT_NEAR(prot(0), 0.783333, 1e-6);
    EXPECT_NEAR(prot(1), 0.216667, 1e-6);
    EXPECT_NEAR(prot(0), 0.5 * 0.8 + 0.375 * 0.8 + 0.125 * 2.0 / 3.0, 1e-15);

    auto [next, C] = pcal::update(mixed, p, 0);
    EXPECT_NEAR(C, 0.4 + 0.3 + 0.125 * 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(C, prot(0), 1e-12);
    EXPECT_NEAR(next.P, 0.4 / C, 1e-15);
    EXPECT_NEAR(next.P, 0.510638, 1e-6);
    EXPECT_NEAR(next.A(0, 0), 0.382979, 1e-6);
    EXPECT_NEAR(next.A(0, 1), 0.106383, 1e-6);
    EXPECT_EQ(next.step_count, 1);
}

TEST(JumperStep, NeutralOnlyGridPassesThrough)
{
    std::mt19937_64 rng(11);
    const JumperConfig c{0.3, {0.2, 0.05}, ThetaGrid::neutral_only(3)};
    auto s = random_stream(rng, 3, 300);
    const auto run = pcal::process_stream(c, s.probs, s.labels);
    double base_ll = 0, prot_ll = 0;
    for (std::size_t i = 0; i < s.probs.size(); ++i) {
        EXPECT_LE((run.outcomes[i].protected_p.vector() - s.probs[i].vector()).cwiseAbs().maxCoeff(), 1e-12);
        base_ll -= std::log(s.probs[i](s.labels[i]));
        prot_ll -= std::log(run.outcomes[i].protected_p(s.labels[i]));
    }
    EXPECT_NEAR(prot_ll, base_ll, 1e-9);
}

TEST(JumperStep, OneHotMatchIsStationary)
{
    const JumperConfig c{0.4, {0.3}, ThetaGrid::neutral_only(2)};
    const ProbVector p{0.0, 1.0};
    const auto s0 = pcal::init(c);
    auto [prot, mixed] = pcal::predict(c, s0, p);
    auto [s1, C] = pcal::update(mixed, p, 1);
    EXPECT_EQ(C, 1.0);
    EXPECT_DOUBLE_EQ(s1.P, s0.P);
    EXPECT_DOUBLE_EQ(s1.A(0, 0), s0.A(0, 0));
}

TEST(JumperStep, SymmetricGridOnUniformInput)
{
    std::mt19937_64 rng(5);
    const JumperConfig c{0.5, {0.01, 0.1}, pcal::build_default_grid<double>(3, {1, 0.5, 2}, {})};
    auto s = random_stream(rng, 3, 50);
    auto state = pcal::process_stream(c, s.probs, s.labels).final_state;
    const auto [prot, mixed] = pcal::predict(c, state, ProbVector::uniform(3));
    EXPECT_NEAR(prot(0), prot(1), 1e-12);
    EXPECT_NEAR(prot(1), prot(2), 1e-12);
}

TEST(JumperStep, LabelOutOfRange)
{
    const auto config = worked_example_config();
    const ProbVector p{0.8, 0.2};
    auto [prot, mixed] = pcal::predict(config, pcal::init(config), p);
    EXPECT_THROW(pcal::update(mixed, p, 2), std::out_of_range);
    EXPECT_THROW(pcal::update(mixed, p, -1), std::out_of_range);
}

TEST(JumperStep, AllZeroLikelihoodErrors)
{
    const JumperConfig c{0.5, {0.1}, pcal::build_default_grid(2)};
    const ProbVector p{1.0, 0.0};
    auto [prot, mixed] = pcal::predict(c, pcal::init(c), p);
    EXPECT_THROW(pcal::update(mixed, p, 1), std::domain_error);
}

TEST(JumperInvariants, MassConservationAndNormalizer)
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 2 + trial % 4;
        const JumperConfig c{0.1 + 0.04 * trial, {0.3, 0.01, 1e-4}, pcal::build_default_grid(K)};
        auto s = random_stream(rng, K, 200);
        auto state = pcal::init(c);
        EXPECT_NEAR(state.total_mass(), 1.0, 1e-9);
        for (std::size_t i = 0; i < s.probs.size(); ++i) {
            auto [prot, mixed] = pcal::predict(c, state, s.probs[i]);
            // mixing conserves each row's mass
            for (Eigen::Index j = 0; j < state.A.rows(); ++j)
                EXPECT_NEAR(mixed.state.A.row(j).sum(), state.A.row(j).sum(), 1e-12);
            auto [next, C] = pcal::update(mixed, s.probs[i], s.labels[i]);
            EXPECT_NEAR(C, prot(s.labels[i]), 1e-12);
            EXPECT_NEAR(next.total_mass(), 1.0, 1e-9);
            EXPECT_GT(next.P, 0.0);
            EXPECT_TRUE((next.A.array() > 0).all());
            state = std::move(next);
        }
    }
}

TEST(JumperInvariants, ProtectionCostBound)
{
    std::mt19937_64 rng(99);
    const JumperConfig c;  // defaults, pi = 0.5
    auto s = random_stream(rng, 2, 1000);
    const auto run = pcal::process_stream(c, s.probs, s.labels);
    double base_ll = 0, prot_ll = 0;
    for (std::size_t i = 0; i < s.probs.size(); ++i) {
        base_ll -= std::log(s.probs[i](s.labels[i]));
        prot_ll -= std::log(run.outcomes[i].protected_p(s.labels[i]));
    }
    EXPECT_LE(prot_ll - base_ll, std::log(2.0) + 1e-9);
}

TEST(JumperInvariants, BoundHoldsForEveryPi)
{
    std::mt19937_64 rng(17);
    for (double pi : {0.01, 0.2, 0.5, 0.8, 0.99}) {
        JumperConfig c{pi, {0.01, 0.001, 0.0001}, pcal::build_default_grid(3)};
        auto s = random_stream(rng, 3, 400);
        const auto run = pcal::process_stream(c, s.probs, s.labels);
        double regret = 0;
        for (std::size_t i = 0; i < s.probs.size(); ++i)
            regret += std::log(s.probs[i](s.labels[i])) - std::log(run.outcomes[i].protected_p(s.labels[i]));
        EXPECT_LE(regret, std::log(1 / pi) + 1e-9) << "pi=" << pi;
    }
}

TEST(JumperInvariants, ReorderingRatesAndGridIsInvisible)
{
    std::mt19937_64 rng(8);
    const auto grid = pcal::build_default_grid(3);
    std::vector<ThetaParams> shuffled(grid.begin() + 1, grid.end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.insert(shuffled.begin(), grid[0]);

    const JumperConfig a{0.5, {0.01, 0.001, 0.1}, grid};
    const JumperConfig b{0.5, {0.1, 0.01, 0.001}, ThetaGrid(shuffled)};
    auto s = random_stream(rng, 3, 300);
    const auto ra = pcal::process_stream(a, s.probs, s.labels);
    const auto rb = pcal::process_stream(b, s.probs, s.labels);
    for (std::size_t i = 0; i < s.probs.size(); ++i)
        EXPECT_LE((ra.outcomes[i].protected_p.vector() - rb.outcomes[i].protected_p.vector()).cwiseAbs().maxCoeff(),
                  1e-12);
}

TEST(ProcessStream, EmptyStreamReturnsInitialState)
{
    const JumperConfig c;
    const auto run = pcal::process_stream(c, {}, {});
    EXPECT_TRUE(run.outcomes.empty());
    EXPECT_EQ(run.final_state.P, c.pi);
    EXPECT_EQ(run.final_state.A, pcal::init(c).A);
    EXPECT_EQ(run.final_state.step_count, 0);
}

TEST(ProcessStream, InconsistentClassCount)
{
    const JumperConfig c;
    std::vector<ProbVector> probs{ProbVector{0.5, 0.5}, ProbVector{0.2, 0.3, 0.5}};
    EXPECT_THROW(pcal::process_stream(c, probs, {0, 1}), std::invalid_argument);
}

TEST(ProcessStream, Deterministic)
{
    std::mt19937_64 rng(1);
    auto s = random_stream(rng, 2, 500);
    const JumperConfig c;
    const auto r1 = pcal::process_stream(c, s.probs, s.labels);
    const auto r2 = pcal::process_stream(c, s.probs, s.labels);
    for (std::size_t i = 0; i < s.probs.size(); ++i)
        EXPECT_EQ(r1.outcomes[i].protected_p, r2.outcomes[i].protected_p);
    EXPECT_EQ(r1.final_state.A, r2.final_state.A);
}

TEST(ProcessStream, AdaptsToMiscalibration)
{
    // Base is overconfident: it claims 0.95 but is right only 70% of the time.
    std::mt19937_64 rng(4);
    std::bernoulli_distribution right(0.7), side(0.5);
    std::vector<ProbVector> probs;
    std::vector<int> labels;
    for (int i = 0; i < 2000; ++i) {
        const int guess = side(rng);
        probs.push_back(guess ? ProbVector{0.05, 0.95} : ProbVector{0.95, 0.05});
        labels.push_back(right(rng) ? guess : 1 - guess);
    }
    const auto run = pcal::process_stream(JumperConfig{}, probs, labels);
    double base_ll = 0, prot_ll = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        base_ll -= std::log(probs[i](labels[i]));
        prot_ll -= std::log(run.outcomes[i].protected_p(labels[i]));
    }
    EXPECT_LT(prot_ll, base_ll - 100);
    // The shrinking calibrator (beta = 0.5, alpha = 0) should carry the most weight.
    const Eigen::VectorXd w = run.final_state.theta_weights();
    Eigen::Index best = 0;
    w.maxCoeff(&best);
    const auto grid = pcal::build_default_grid(2);
    EXPECT_EQ(grid[static_cast<std::size_t>(best)].beta(), 0.5);
    EXPECT_TRUE(grid[static_cast<std::size_t>(best)].alpha().isZero());
}

TEST(CompositeJumper, MatchesProcessStream)
{
    std::mt19937_64 rng(21);
    auto s = random_stream(rng, 3, 100);
    JumperConfig c{0.5, {0.01}, pcal::build_default_grid(3)};
    pcal::CompositeJumper cj(c);
    const auto run = pcal::process_stream(c, s.probs, s.labels);
    for (std::size_t i = 0; i < s.probs.size(); ++i) {
        const auto o = cj.step(s.probs[i], s.labels[i]);
        EXPECT_EQ(o.protected_p, run.outcomes[i].protected_p);
        EXPECT_EQ(o.normalizer_C, run.outcomes[i].normalizer_C);
    }
}

}  // namespace
