#ifndef PCAL_PROB_VECTOR_HPP
#define PCAL_PROB_VECTOR_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcal {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A point on the probability simplex over K >= 2 classes.
///
/// Construction accepts vectors whose entries are nonnegative and sum to one
/// within 1e-6; such vectors are renormalized so the stored entries sum to
/// one to working precision. Anything else is rejected.
template <typename Scalar>
class BasicProbVector {
public:
    static constexpr double kAcceptTolerance = 1e-6;

    BasicProbVector() = default;

    explicit BasicProbVector(const Vec<Scalar>& entries) : p_(entries)
    {
        if (p_.size() < 2)
            throw std::invalid_argument("probability vector needs at least 2 classes");
        for (Eigen::Index k = 0; k < p_.size(); ++k) {
            if (!std::isfinite(static_cast<double>(p_(k))) || p_(k) < Scalar(0))
                throw std::invalid_argument("probability entries must be finite and nonnegative");
        }
        const Scalar total = p_.sum();
        if (std::abs(static_cast<double>(total) - 1.0) > kAcceptTolerance)
            throw std::invalid_argument("probability entries sum to " +
                                        std::to_string(static_cast<double>(total)) + ", not 1");
        if (total != Scalar(1))
            p_ /= total;
    }

    BasicProbVector(std::initializer_list<Scalar> entries)
        : BasicProbVector(from_list(entries))
    {
    }

    Eigen::Index size() const { return p_.size(); }
    Scalar operator[](Eigen::Index k) const { return p_(k); }
    Scalar operator()(Eigen::Index k) const { return p_(k); }
    const Vec<Scalar>& vector() const { return p_; }

    Eigen::Index argmax() const
    {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < p_.size(); ++k)
            if (p_(k) > p_(best))
                best = k;
        return best;
    }

    std::vector<Scalar> to_std() const { return {p_.data(), p_.data() + p_.size()}; }

    static BasicProbVector uniform(Eigen::Index classes)
    {
        return BasicProbVector(Vec<Scalar>::Constant(classes, Scalar(1) / Scalar(classes)));
    }

    friend bool operator==(const BasicProbVector& a, const BasicProbVector& b)
    {
        return a.p_.size() == b.p_.size() && a.p_ == b.p_;
    }

private:
    static Vec<Scalar> from_list(std::initializer_list<Scalar> entries)
    {
        Vec<Scalar> v(static_cast<Eigen::Index>(entries.size()));
        std::copy(entries.begin(), entries.end(), v.data());
        return v;
    }

    Vec<Scalar> p_;
};

using ProbVector = BasicProbVector<double>;

/// Clamps every entry into [eps, 1 - eps] and renormalizes. Entries must be
/// finite and nonnegative; the raw sum must lie within `sum_tolerance` of 1.
template <typename Scalar>
BasicProbVector<Scalar> clamp_renormalize(const Vec<Scalar>& raw, Scalar eps,
                                          double sum_tolerance = 1e-4)
{
    if (raw.size() < 2)
        throw std::invalid_argument("probability vector needs at least 2 classes");
    if (!(eps > Scalar(0)) || eps >= Scalar(0.5))
        throw std::invalid_argument("clamp epsilon must lie in (0, 0.5)");
    Scalar total(0);
    for (Eigen::Index k = 0; k < raw.size(); ++k) {
        if (!std::isfinite(static_cast<double>(raw(k))) || raw(k) < Scalar(0))
            throw std::invalid_argument("probability entries must be finite and nonnegative");
        total += raw(k);
    }
    if (std::abs(static_cast<double>(total) - 1.0) > sum_tolerance)
        throw std::invalid_argument("probability entries sum to " +
                                    std::to_string(static_cast<double>(total)) + ", not 1");
    Vec<Scalar> clamped = raw.cwiseMax(eps).cwiseMin(Scalar(1) - eps);
    clamped /= clamped.sum();
    return BasicProbVector<Scalar>(clamped);
}

}  // namespace pcal

#endif  // PCAL_PROB_VECTOR_HPP
