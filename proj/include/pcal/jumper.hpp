#ifndef PCAL_JUMPER_HPP
#define PCAL_JUMPER_HPP

// Composite Jumper predictor.
//
// The state holds a weight P on the base forecaster and a |J| x |Theta|
// matrix A of weights on "switching" forecasters, one row per jump rate.
// Each step
//   1. diffuses every row: A[J,:] <- (1 - J) A[J,:] + J * sum(A[J,:]) / |Theta|
//   2. predicts p' = P p + sum_{J,theta} A[J,theta] f_theta(p)
//   3. multiplies every weight by the probability its forecaster gave the
//      observed label and renormalizes by the total C = p'(y).
//
// The running product of C is at least pi times the base forecaster's, which
// bounds the log-loss regret against the base by log(1/pi).

#include "pcal/cox.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcal {

template <typename Scalar>
struct BasicJumperConfig {
    Scalar pi = Scalar(0.5);
    std::vector<Scalar> jump_rates{Scalar(1e-2), Scalar(1e-3), Scalar(1e-4)};
    BasicThetaGrid<Scalar> grid = build_default_grid<Scalar>(2);

    Eigen::Index classes() const { return grid.classes(); }

    void validate() const
    {
        if (!(pi > Scalar(0) && pi < Scalar(1)))
            throw std::invalid_argument("pi must lie in (0, 1)");
        if (jump_rates.empty())
            throw std::invalid_argument("at least one jump rate is required");
        for (std::size_t i = 0; i < jump_rates.size(); ++i) {
            if (!(jump_rates[i] > Scalar(0) && jump_rates[i] < Scalar(1)))
                throw std::invalid_argument("jump rates must lie in (0, 1)");
            for (std::size_t j = 0; j < i; ++j)
                if (jump_rates[i] == jump_rates[j])
                    throw std::invalid_argument("jump rates must be distinct");
        }
    }
};

using JumperConfig = BasicJumperConfig<double>;

/// Class-count independent protection settings; the grid is built per K.
struct JumperParams {
    double pi = 0.5;
    std::vector<double> jump_rates{1e-2, 1e-3, 1e-4};
    std::vector<double> betas{1, 0.5, 2};
    std::vector<double> alpha_magnitudes{1};

    JumperConfig for_classes(Eigen::Index classes) const
    {
        JumperConfig c{pi, jump_rates, build_default_grid<double>(classes, betas, alpha_magnitudes)};
        c.validate();
        return c;
    }
};

template <typename Scalar>
struct BasicJumperState {
    Scalar P = Scalar(0);
    Mat<Scalar> A;  // rows: jump rates, cols: grid members
    long step_count = 0;

    Scalar total_mass() const { return P + A.sum(); }

    /// Weight on each calibrator, summed over jump rates.
    Vec<Scalar> theta_weights() const { return A.colwise().sum().transpose(); }
};

using JumperState = BasicJumperState<double>;

/// State after jump mixing and prediction, waiting for the label.
template <typename Scalar>
struct BasicMixedState {
    BasicJumperState<Scalar> state;
    Mat<Scalar> calibrated;  // K x |Theta|, column t = f_theta_t(p)
};

using MixedState = BasicMixedState<double>;

template <typename Scalar>
struct BasicStepOutcome {
    BasicProbVector<Scalar> protected_p;
    BasicProbVector<Scalar> base_p;
    Scalar normalizer_C = Scalar(0);
};

using StepOutcome = BasicStepOutcome<double>;

template <typename Scalar>
BasicJumperState<Scalar> init(const BasicJumperConfig<Scalar>& config)
{
    config.validate();
    BasicJumperState<Scalar> s;
    s.P = config.pi;
    const auto rates = static_cast<Eigen::Index>(config.jump_rates.size());
    s.A = Mat<Scalar>::Zero(rates, static_cast<Eigen::Index>(config.grid.size()));
    s.A.col(0).setConstant((Scalar(1) - config.pi) / Scalar(rates));
    return s;
}

/// Applies the jump diffusion to every row of A and returns the mixture
/// prediction for `p` together with the mixed state.
template <typename Scalar>
std::pair<BasicProbVector<Scalar>, BasicMixedState<Scalar>>
predict(const BasicJumperConfig<Scalar>& config, const BasicJumperState<Scalar>& state,
        const BasicProbVector<Scalar>& p)
{
    if (p.size() != config.classes())
        throw std::invalid_argument("predict: class count mismatch");
    const auto n_theta = static_cast<Eigen::Index>(config.grid.size());

    BasicMixedState<Scalar> mixed{state, Mat<Scalar>(p.size(), n_theta)};
    Mat<Scalar>& A = mixed.state.A;
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        const Scalar J = config.jump_rates[static_cast<std::size_t>(j)];
        const Scalar row_mass = A.row(j).sum();
        A.row(j) = (Scalar(1) - J) * A.row(j).array() + row_mass * J / Scalar(n_theta);
    }

    for (Eigen::Index t = 0; t < n_theta; ++t)
        mixed.calibrated.col(t) = cox_apply(p, config.grid[static_cast<std::size_t>(t)]).vector();

    Vec<Scalar> out = mixed.state.P * p.vector() + mixed.calibrated * mixed.state.theta_weights();
    out /= out.sum();
    return {BasicProbVector<Scalar>(out), std::move(mixed)};
}

/// Bayes update with the categorical likelihood of label `y`, followed by
/// renormalization. Returns the new state and the normalizer C.
template <typename Scalar>
std::pair<BasicJumperState<Scalar>, Scalar> update(BasicMixedState<Scalar> mixed,
                                                   const BasicProbVector<Scalar>& p, int y)
{
    if (y < 0 || y >= p.size())
        throw std::out_of_range("label " + std::to_string(y) + " outside [0, " +
                                std::to_string(p.size()) + ")");
    auto& s = mixed.state;
    s.P *= p(y);
    s.A = s.A * mixed.calibrated.row(y).asDiagonal();
    const Scalar C = s.total_mass();
    if (!(C > Scalar(1e-300)))
        throw std::domain_error("every forecaster assigned zero probability to label " +
                                std::to_string(y));
    s.P /= C;
    s.A /= C;
    ++s.step_count;
    return {std::move(s), C};
}

template <typename Scalar>
struct BasicStreamResult {
    std::vector<BasicStepOutcome<Scalar>> outcomes;
    BasicJumperState<Scalar> final_state;
};

/// Folds predict + update over a labeled sequence.
template <typename Scalar>
BasicStreamResult<Scalar> process_stream(const BasicJumperConfig<Scalar>& config,
                                         const std::vector<BasicProbVector<Scalar>>& probs,
                                         const std::vector<int>& labels)
{
    if (probs.size() != labels.size())
        throw std::invalid_argument("process_stream: predictions and labels differ in length");
    BasicStreamResult<Scalar> result{{}, init(config)};
    result.outcomes.reserve(probs.size());
    for (std::size_t n = 0; n < probs.size(); ++n) {
        if (probs[n].size() != config.classes())
            throw std::invalid_argument("process_stream: record " + std::to_string(n + 1) +
                                        " has " + std::to_string(probs[n].size()) +
                                        " classes, expected " +
                                        std::to_string(config.classes()));
        auto [protected_p, mixed] = predict(config, result.final_state, probs[n]);
        auto [next, C] = update(std::move(mixed), probs[n], labels[n]);
        result.final_state = std::move(next);
        result.outcomes.push_back({std::move(protected_p), probs[n], C});
    }
    return result;
}

/// Stateful wrapper around init/predict/update for one stream.
template <typename Scalar>
class BasicCompositeJumper {
public:
    explicit BasicCompositeJumper(BasicJumperConfig<Scalar> config)
        : config_(std::move(config)), state_(init(config_))
    {
    }

    BasicCompositeJumper(BasicJumperConfig<Scalar> config, BasicJumperState<Scalar> state)
        : config_(std::move(config)), state_(std::move(state))
    {
    }

    BasicStepOutcome<Scalar> step(const BasicProbVector<Scalar>& p, int y)
    {
        auto [protected_p, mixed] = predict(config_, state_, p);
        auto [next, C] = update(std::move(mixed), p, y);
        state_ = std::move(next);
        return {std::move(protected_p), p, C};
    }

    const BasicJumperConfig<Scalar>& config() const { return config_; }
    const BasicJumperState<Scalar>& state() const { return state_; }

private:
    BasicJumperConfig<Scalar> config_;
    BasicJumperState<Scalar> state_;
};

using CompositeJumper = BasicCompositeJumper<double>;

}  // namespace pcal

#endif  // PCAL_JUMPER_HPP
