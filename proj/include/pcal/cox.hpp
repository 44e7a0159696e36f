#ifndef PCAL_COX_HPP
#define PCAL_COX_HPP

// Cox calibrating functions on the simplex:
//
//   f(p)_y = p_y^beta * exp(alpha_y) / sum_y' p_y'^beta * exp(alpha_y')
//
// alpha is only defined up to an additive constant, so every ThetaParams is
// stored shifted to min(alpha) = 0.

#include "pcal/prob_vector.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pcal {

template <typename Scalar>
class BasicThetaParams {
public:
    BasicThetaParams(Vec<Scalar> alpha, Scalar beta) : alpha_(std::move(alpha)), beta_(beta)
    {
        if (!(beta_ > Scalar(0)) || !std::isfinite(static_cast<double>(beta_)))
            throw std::invalid_argument("cox beta must be a positive finite number");
        if (alpha_.size() < 2)
            throw std::invalid_argument("cox alpha needs at least 2 classes");
        for (Eigen::Index k = 0; k < alpha_.size(); ++k)
            if (!std::isfinite(static_cast<double>(alpha_(k))))
                throw std::invalid_argument("cox alpha entries must be finite");
        alpha_.array() -= alpha_.minCoeff();
    }

    static BasicThetaParams neutral(Eigen::Index classes)
    {
        return BasicThetaParams(Vec<Scalar>::Zero(classes), Scalar(1));
    }

    const Vec<Scalar>& alpha() const { return alpha_; }
    Scalar beta() const { return beta_; }
    Eigen::Index classes() const { return alpha_.size(); }

    bool is_neutral() const { return beta_ == Scalar(1) && alpha_.isZero(0); }

    /// Equality of canonical forms, entrywise within `tol`.
    bool equivalent(const BasicThetaParams& other, double tol = 1e-12) const
    {
        if (other.classes() != classes())
            return false;
        if (std::abs(static_cast<double>(beta_ - other.beta_)) > tol)
            return false;
        return ((alpha_ - other.alpha_).cwiseAbs().maxCoeff()) <= Scalar(tol);
    }

private:
    Vec<Scalar> alpha_;
    Scalar beta_;
};

using ThetaParams = BasicThetaParams<double>;

/// Applies one Cox calibrator. Zero entries of `p` stay zero (0^beta = 0).
template <typename Scalar>
BasicProbVector<Scalar> cox_apply(const BasicProbVector<Scalar>& p,
                                  const BasicThetaParams<Scalar>& theta)
{
    if (p.size() != theta.classes())
        throw std::invalid_argument("cox_apply: class count mismatch");
    if (theta.is_neutral())
        return p;

    // Work in the log domain and shift by the max so large beta cannot overflow.
    const Eigen::Index K = p.size();
    Vec<Scalar> logits(K);
    Scalar top = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index k = 0; k < K; ++k) {
        logits(k) = p(k) > Scalar(0)
                        ? theta.beta() * std::log(p(k)) + theta.alpha()(k)
                        : -std::numeric_limits<Scalar>::infinity();
        top = std::max(top, logits(k));
    }
    assert(std::isfinite(static_cast<double>(top)) && "cox_apply: all-zero numerator");

    Vec<Scalar> out(K);
    for (Eigen::Index k = 0; k < K; ++k)
        out(k) = p(k) > Scalar(0) ? std::exp(logits(k) - top) : Scalar(0);
    out /= out.sum();
    return BasicProbVector<Scalar>(out);
}

/// Ordered set of calibrators; member 0 is always the neutral element.
template <typename Scalar>
class BasicThetaGrid {
public:
    explicit BasicThetaGrid(std::vector<BasicThetaParams<Scalar>> thetas)
        : thetas_(std::move(thetas))
    {
        if (thetas_.empty())
            throw std::invalid_argument("theta grid must not be empty");
        if (!thetas_.front().is_neutral())
            throw std::invalid_argument("theta grid must start with the neutral calibrator");
        const Eigen::Index K = thetas_.front().classes();
        for (std::size_t i = 0; i < thetas_.size(); ++i) {
            if (thetas_[i].classes() != K)
                throw std::invalid_argument("theta grid members disagree on class count");
            for (std::size_t j = 0; j < i; ++j)
                if (thetas_[i].equivalent(thetas_[j]))
                    throw std::invalid_argument("theta grid contains duplicate calibrators");
        }
    }

    static BasicThetaGrid neutral_only(Eigen::Index classes)
    {
        return BasicThetaGrid({BasicThetaParams<Scalar>::neutral(classes)});
    }

    std::size_t size() const { return thetas_.size(); }
    Eigen::Index classes() const { return thetas_.front().classes(); }
    const BasicThetaParams<Scalar>& operator[](std::size_t i) const { return thetas_[i]; }
    const std::vector<BasicThetaParams<Scalar>>& members() const { return thetas_; }

    auto begin() const { return thetas_.begin(); }
    auto end() const { return thetas_.end(); }

private:
    std::vector<BasicThetaParams<Scalar>> thetas_;
};

using ThetaGrid = BasicThetaGrid<double>;

/// Cross product of `betas` with the offsets {0} U {+m e_k} U {-m e_k},
/// canonicalized and deduplicated, neutral element first.
template <typename Scalar = double>
BasicThetaGrid<Scalar> build_default_grid(Eigen::Index classes,
                                          const std::vector<Scalar>& betas = {1, 0.5, 2},
                                          const std::vector<Scalar>& alpha_magnitudes = {1})
{
    if (classes < 2)
        throw std::invalid_argument("theta grid needs at least 2 classes");
    if (betas.empty() || std::find(betas.begin(), betas.end(), Scalar(1)) == betas.end())
        throw std::invalid_argument("betas must include the neutral value 1");

    std::vector<Vec<Scalar>> offsets{Vec<Scalar>::Zero(classes)};
    for (Scalar m : alpha_magnitudes) {
        for (Eigen::Index k = 0; k < classes; ++k) {
            offsets.push_back(Vec<Scalar>::Unit(classes, k) * m);
            offsets.push_back(Vec<Scalar>::Unit(classes, k) * -m);
        }
    }

    std::vector<BasicThetaParams<Scalar>> thetas{BasicThetaParams<Scalar>::neutral(classes)};
    for (Scalar beta : betas) {
        for (const auto& alpha : offsets) {
            BasicThetaParams<Scalar> candidate(alpha, beta);
            const bool seen = std::any_of(thetas.begin(), thetas.end(), [&](const auto& t) {
                return t.equivalent(candidate);
            });
            if (!seen)
                thetas.push_back(std::move(candidate));
        }
    }
    return BasicThetaGrid<Scalar>(std::move(thetas));
}

}  // namespace pcal

#endif  // PCAL_COX_HPP
