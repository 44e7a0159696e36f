#ifndef PCAL_METRICS_HPP
#define PCAL_METRICS_HPP

#include "pcal/prob_vector.hpp"

#include <optional>
#include <span>
#include <vector>

namespace pcal {

/// Rows are examples, columns are classes.
using ProbMatrix = Eigen::MatrixXd;

ProbMatrix stack_rows(std::span<const ProbVector> rows);

enum class EceNorm { l1, l2 };

double log_loss(const ProbMatrix& probs, std::span<const int> labels);
double brier_loss(const ProbMatrix& probs, std::span<const int> labels);
double accuracy(const ProbMatrix& probs, std::span<const int> labels);

/// Per-class calibration error. For every class, the predicted probabilities
/// are split into `bins` equal-mass bins (ties always share a bin), the
/// per-bin gap |mean prediction - label frequency| is combined with the bin
/// weights under the chosen norm, and the result is averaged over classes.
double ece(const ProbMatrix& probs, std::span<const int> labels, int bins = 15,
           EceNorm norm = EceNorm::l2);

/// Binary AUC from the class-1 column, ties scored by midrank.
double auc(const ProbMatrix& probs, std::span<const int> labels);

struct ReliabilityBin {
    double mean_predicted;
    double frequency;
    double weight;
};

struct ReliabilityCurve {
    std::vector<std::vector<ReliabilityBin>> per_class;
};

ReliabilityCurve reliability(const ProbMatrix& probs, std::span<const int> labels,
                             int bins = 15);

struct MetricsReport {
    double log_loss = 0;
    double brier = 0;
    double ece = 0;
    double accuracy = 0;
    std::optional<double> auc;  // binary streams with both classes present
    long n = 0;
};

MetricsReport evaluate(const ProbMatrix& probs, std::span<const int> labels, int ece_bins = 15,
                       EceNorm norm = EceNorm::l2);

}  // namespace pcal

#endif  // PCAL_METRICS_HPP
