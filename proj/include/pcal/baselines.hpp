#ifndef PCAL_BASELINES_HPP
#define PCAL_BASELINES_HPP

// Post-hoc calibrators fitted once on a calibration split: Platt scaling,
// temperature scaling and isotonic regression (pool adjacent violators).
// Platt and isotonic are binary; multiclass use goes one-vs-rest.

#include "pcal/metrics.hpp"

#include <span>
#include <vector>

namespace pcal {

inline constexpr double kDefaultClampEpsilon = 1e-6;

double logit(double p);
double sigmoid(double z);

struct PlattModel {
    double a = 1;
    double b = 0;
    bool degenerate = false;  // single-class training data
    int iterations = 0;

    double apply(double score, double eps = kDefaultClampEpsilon) const;
};

/// Mean log loss of sigmoid(a s + b) against binary labels.
double platt_objective(std::span<const double> scores, std::span<const int> labels, double a,
                       double b);

/// Newton's method with backtracking; stops at gradient norm <= 1e-8 or
/// after 1000 iterations.
PlattModel fit_platt(std::span<const double> scores, std::span<const int> labels,
                     double eps = kDefaultClampEpsilon);

struct TemperatureModel {
    double T = 1;
    bool at_boundary = false;

    ProbVector apply(const ProbVector& p, double eps = kDefaultClampEpsilon) const;
    ProbMatrix apply(const ProbMatrix& probs, double eps = kDefaultClampEpsilon) const;
};

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 20.0;

/// Mean log loss of softmax(ln p / T).
double temperature_objective(const ProbMatrix& probs, std::span<const int> labels, double T,
                             double eps = kDefaultClampEpsilon);

/// Golden-section search for T in [0.05, 20] to tolerance 1e-6.
TemperatureModel fit_temperature(const ProbMatrix& probs, std::span<const int> labels,
                                 double eps = kDefaultClampEpsilon);

struct IsotonicModel {
    std::vector<double> breakpoints;  // strictly increasing
    std::vector<double> values;       // nondecreasing

    /// Step function with flat extension, clamped to [eps, 1 - eps].
    double apply(double score, double eps = kDefaultClampEpsilon) const;
    double apply_unclamped(double score) const;
};

/// Least-squares nondecreasing fit of `targets` ordered by `scores`. Equal
/// scores are pooled before the violator pass. Optional `weights` default to 1.
IsotonicModel fit_isotonic(std::span<const double> scores, std::span<const double> targets,
                           std::span<const double> weights = {});

/// One-vs-rest wrappers for K >= 2. For K = 2 they reduce to the binary fit on
/// class 1 (Platt on logit(p_1), isotonic on p_1).
struct OvrPlatt {
    std::vector<PlattModel> per_class;
    ProbMatrix apply(const ProbMatrix& probs, double eps = kDefaultClampEpsilon) const;
};

struct OvrIsotonic {
    std::vector<IsotonicModel> per_class;
    ProbMatrix apply(const ProbMatrix& probs, double eps = kDefaultClampEpsilon) const;
};

OvrPlatt fit_platt_ovr(const ProbMatrix& probs, std::span<const int> labels,
                       double eps = kDefaultClampEpsilon);
OvrIsotonic fit_isotonic_ovr(const ProbMatrix& probs, std::span<const int> labels);

}  // namespace pcal

#endif  // PCAL_BASELINES_HPP
