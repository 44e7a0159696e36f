#include "pcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pcal {

namespace {

void check_batch(const ProbMatrix& probs, std::span<const int> labels)
{
    if (probs.rows() == 0)
        throw std::invalid_argument("metrics need at least one example");
    if (static_cast<std::size_t>(probs.rows()) != labels.size())
        throw std::invalid_argument("prediction and label counts differ");
    for (int y : labels)
        if (y < 0 || y >= probs.cols())
            throw std::out_of_range("label " + std::to_string(y) + " outside [0, " +
                                    std::to_string(probs.cols()) + ")");
}

// Equal-mass bin thresholds over `values`: the (i * n / B)-th order
// statistics for i = 1..B-1, deduplicated. A value falls in bin
// upper_bound(thresholds, value).
std::vector<double> equal_mass_thresholds(const Eigen::VectorXd& values, int bins)
{
    std::vector<double> sorted(values.data(), values.data() + values.size());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<long>(sorted.size());
    std::vector<double> thresholds;
    for (int i = 1; i < bins; ++i)
        thresholds.push_back(sorted[static_cast<std::size_t>(i * n / bins)]);
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    return thresholds;
}

std::vector<ReliabilityBin> bin_class(const ProbMatrix& probs, std::span<const int> labels,
                                      Eigen::Index k, int bins)
{
    const Eigen::VectorXd col = probs.col(k);
    const auto thresholds = equal_mass_thresholds(col, bins);
    const std::size_t n_bins = thresholds.size() + 1;
    std::vector<double> sum_p(n_bins, 0.0), sum_y(n_bins, 0.0), count(n_bins, 0.0);
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        const auto b = static_cast<std::size_t>(
            std::upper_bound(thresholds.begin(), thresholds.end(), col(i)) - thresholds.begin());
        sum_p[b] += col(i);
        sum_y[b] += labels[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0;
        count[b] += 1.0;
    }
    std::vector<ReliabilityBin> out;
    const double n = static_cast<double>(col.size());
    for (std::size_t b = 0; b < n_bins; ++b)
        if (count[b] > 0)
            out.push_back({sum_p[b] / count[b], sum_y[b] / count[b], count[b] / n});
    return out;
}

}  // namespace

ProbMatrix stack_rows(std::span<const ProbVector> rows)
{
    if (rows.empty())
        return ProbMatrix(0, 0);
    ProbMatrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw std::invalid_argument("rows disagree on class count");
        m.row(static_cast<Eigen::Index>(i)) = rows[i].vector().transpose();
    }
    return m;
}

double log_loss(const ProbMatrix& probs, std::span<const int> labels)
{
    check_batch(probs, labels);
    double total = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double p = probs(i, labels[static_cast<std::size_t>(i)]);
        if (!(p > 0))
            throw std::domain_error("zero probability on the observed label at example " +
                                    std::to_string(i + 1) + " (inputs must be clamped)");
        total -= std::log(p);
    }
    return total / static_cast<double>(probs.rows());
}

double brier_loss(const ProbMatrix& probs, std::span<const int> labels)
{
    check_batch(probs, labels);
    double total = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::RowVectorXd gap = probs.row(i);
        gap(labels[static_cast<std::size_t>(i)]) -= 1.0;
        total += gap.squaredNorm();
    }
    return total / static_cast<double>(probs.rows());
}

double accuracy(const ProbMatrix& probs, std::span<const int> labels)
{
    check_batch(probs, labels);
    long hits = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < probs.cols(); ++k)
            if (probs(i, k) > probs(i, best))
                best = k;
        hits += best == labels[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

double ece(const ProbMatrix& probs, std::span<const int> labels, int bins, EceNorm norm)
{
    check_batch(probs, labels);
    if (bins < 1)
        throw std::invalid_argument("ece needs at least one bin");
    double total = 0;
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
        double err = 0;
        for (const auto& b : bin_class(probs, labels, k, bins)) {
            const double gap = std::abs(b.mean_predicted - b.frequency);
            err += b.weight * (norm == EceNorm::l2 ? gap * gap : gap);
        }
        total += norm == EceNorm::l2 ? std::sqrt(err) : err;
    }
    return total / static_cast<double>(probs.cols());
}

double auc(const ProbMatrix& probs, std::span<const int> labels)
{
    check_batch(probs, labels);
    if (probs.cols() != 2)
        throw std::invalid_argument("auc is defined for binary streams only");
    const auto n = static_cast<std::size_t>(probs.rows());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probs(a, 1) < probs(b, 1); });

    double positive_rank_sum = 0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && probs(order[j], 1) == probs(order[i], 1))
            ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
        for (std::size_t r = i; r < j; ++r)
            if (labels[order[r]] == 1) {
                positive_rank_sum += midrank;
                ++positives;
            }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0)
        throw std::domain_error("auc needs both classes present");
    const double np = static_cast<double>(positives);
    return (positive_rank_sum - np * (np + 1) / 2) / (np * static_cast<double>(negatives));
}

ReliabilityCurve reliability(const ProbMatrix& probs, std::span<const int> labels, int bins)
{
    check_batch(probs, labels);
    if (bins < 1)
        throw std::invalid_argument("reliability needs at least one bin");
    ReliabilityCurve curve;
    for (Eigen::Index k = 0; k < probs.cols(); ++k)
        curve.per_class.push_back(bin_class(probs, labels, k, bins));
    return curve;
}

MetricsReport evaluate(const ProbMatrix& probs, std::span<const int> labels, int ece_bins,
                       EceNorm norm)
{
    MetricsReport r;
    r.log_loss = log_loss(probs, labels);
    r.brier = brier_loss(probs, labels);
    r.ece = ece(probs, labels, ece_bins, norm);
    r.accuracy = accuracy(probs, labels);
    r.n = static_cast<long>(probs.rows());
    if (probs.cols() == 2) {
        const bool has0 = std::find(labels.begin(), labels.end(), 0) != labels.end();
        const bool has1 = std::find(labels.begin(), labels.end(), 1) != labels.end();
        if (has0 && has1)
            r.auc = auc(probs, labels);
    }
    return r;
}

}  // namespace pcal
