#ifndef PCAL_ORACLE_HPP
#define PCAL_ORACLE_HPP

// Brute-force Composite Jumper: enumerates every calibrator trajectory under
// the jump-Markov prior and forms the posterior-predictive mixture directly.
// Exponential in the horizon; meant for cross-checking the recursion in
// jumper.hpp on tiny instances.
//
// Trajectory prior for jump rate J: start at theta_0, apply one transition
// per step before that step's prediction, where a transition stays with
// probability (1 - J) + J/|Theta| and moves to any other member with
// probability J/|Theta|. Each J-branch carries mass (1 - pi)/|J|.

#include "pcal/jumper.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pcal::oracle {

inline constexpr double kMaxEnumeration = 1e6;

namespace detail {

// Cox function evaluated literally with pow, independent of cox_apply.
template <typename Scalar>
Vec<Scalar> cox_direct(const Vec<Scalar>& p, const BasicThetaParams<Scalar>& theta)
{
    Vec<Scalar> num(p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k)
        num(k) = p(k) > Scalar(0) ? std::pow(p(k), theta.beta()) * std::exp(theta.alpha()(k))
                                  : Scalar(0);
    return num / num.sum();
}

template <typename Scalar>
Scalar transition(std::size_t from, std::size_t to, Scalar J, std::size_t n_theta)
{
    const Scalar move = J / static_cast<Scalar>(n_theta);
    return from == to ? (Scalar(1) - J) + move : move;
}

// Odometer over Theta^length.
inline bool advance(std::vector<std::size_t>& path, std::size_t n_theta)
{
    for (std::size_t i = path.size(); i-- > 0;) {
        if (++path[i] < n_theta)
            return true;
        path[i] = 0;
    }
    return false;
}

template <typename Scalar>
void check_size(const BasicJumperConfig<Scalar>& config, std::size_t horizon)
{
    const double count = std::pow(static_cast<double>(config.grid.size()),
                                  static_cast<double>(horizon)) *
                         static_cast<double>(config.jump_rates.size());
    if (count > kMaxEnumeration)
        throw std::length_error("instance too large for trajectory enumeration");
}

}  // namespace detail

/// pi plus the prior mass of every length-`horizon` trajectory over every
/// jump-rate branch. Equals 1 up to rounding.
template <typename Scalar>
Scalar prior_mass(const BasicJumperConfig<Scalar>& config, std::size_t horizon)
{
    config.validate();
    detail::check_size(config, horizon);
    const std::size_t n_theta = config.grid.size();
    const Scalar branch = (Scalar(1) - config.pi) / static_cast<Scalar>(config.jump_rates.size());
    Scalar total = config.pi;
    for (Scalar J : config.jump_rates) {
        std::vector<std::size_t> path(horizon, 0);
        do {
            Scalar w = branch;
            std::size_t prev = 0;
            for (std::size_t s : path) {
                w *= detail::transition(prev, s, J, n_theta);
                prev = s;
            }
            total += w;
        } while (detail::advance(path, n_theta));
    }
    return total;
}

/// Posterior-predictive mixture at each of the first `horizon` steps.
template <typename Scalar>
std::vector<Vec<Scalar>> enumerate_predict(const BasicJumperConfig<Scalar>& config,
                                           const std::vector<Vec<Scalar>>& probs,
                                           const std::vector<int>& labels, std::size_t horizon)
{
    config.validate();
    if (horizon > probs.size() || horizon > labels.size())
        throw std::invalid_argument("horizon exceeds stream length");
    detail::check_size(config, horizon);

    const std::size_t n_theta = config.grid.size();
    const Scalar branch = (Scalar(1) - config.pi) / static_cast<Scalar>(config.jump_rates.size());

    // calibrated[t][s] = f_theta_s(p_t)
    std::vector<std::vector<Vec<Scalar>>> calibrated(horizon);
    for (std::size_t t = 0; t < horizon; ++t)
        for (std::size_t s = 0; s < n_theta; ++s)
            calibrated[t].push_back(detail::cox_direct(probs[t], config.grid[s]));

    std::vector<Vec<Scalar>> out;
    for (std::size_t t = 0; t < horizon; ++t) {
        // Base forecaster: prior pi, likelihood of the observed prefix.
        Scalar base_w = config.pi;
        for (std::size_t u = 0; u < t; ++u)
            base_w *= probs[u](labels[u]);
        Scalar norm = base_w;
        Vec<Scalar> mix = base_w * probs[t];

        // Trajectories of length t + 1; the last element is the calibrator
        // active at step t.
        for (Scalar J : config.jump_rates) {
            std::vector<std::size_t> path(t + 1, 0);
            do {
                Scalar w = branch;
                std::size_t prev = 0;
                for (std::size_t u = 0; u <= t; ++u) {
                    w *= detail::transition(prev, path[u], J, n_theta);
                    if (u < t)
                        w *= calibrated[u][path[u]](labels[u]);
                    prev = path[u];
                }
                norm += w;
                mix += w * calibrated[t][path[t]];
            } while (detail::advance(path, n_theta));
        }
        out.push_back(mix / norm);
    }
    return out;
}

}  // namespace pcal::oracle

#endif  // PCAL_ORACLE_HPP
