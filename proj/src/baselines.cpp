#include "pcal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pcal {

namespace {

constexpr double kPlattGradTol = 1e-8;
constexpr int kPlattMaxIter = 1000;
constexpr double kTemperatureTol = 1e-6;

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_binary(std::span<const double> scores, std::span<const int> labels)
{
    if (scores.size() != labels.size())
        throw std::invalid_argument("scores and labels differ in length");
    for (int y : labels)
        if (y != 0 && y != 1)
            throw std::invalid_argument("binary calibrator expects labels in {0, 1}");
}

Eigen::MatrixXd clamped_log(const ProbMatrix& probs, double eps)
{
    return probs.array().max(eps).min(1 - eps).log().matrix();
}

Eigen::RowVectorXd softmax_row(const Eigen::RowVectorXd& z)
{
    Eigen::RowVectorXd e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

ProbMatrix renormalize_rows(ProbMatrix m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        m.row(i) /= m.row(i).sum();
    return m;
}

}  // namespace

double logit(double p) { return std::log(p) - std::log1p(-p); }

double sigmoid(double z)
{
    return z >= 0 ? 1 / (1 + std::exp(-z)) : std::exp(z) / (1 + std::exp(z));
}

double PlattModel::apply(double score, double eps) const
{
    return std::clamp(sigmoid(a * score + b), eps, 1 - eps);
}

double platt_objective(std::span<const double> scores, std::span<const int> labels, double a,
                       double b)
{
    double total = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double z = a * scores[i] + b;
        // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
        total += labels[i] == 1 ? softplus(-z) : softplus(z);
    }
    return total / static_cast<double>(scores.size());
}

PlattModel fit_platt(std::span<const double> scores, std::span<const int> labels, double eps)
{
    check_binary(scores, labels);
    if (scores.size() < 2)
        throw std::invalid_argument("platt scaling needs at least 2 examples");
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    const auto n = static_cast<double>(scores.size());
    if (positives == 0 || positives == static_cast<long>(scores.size())) {
        const double rate = std::clamp(static_cast<double>(positives) / n, eps, 1 - eps);
        return {0.0, logit(rate), true, 0};
    }

    Eigen::Vector2d theta(1.0, 0.0);
    double f = platt_objective(scores, labels, theta(0), theta(1));
    int iter = 0;
    for (; iter < kPlattMaxIter; ++iter) {
        Eigen::Vector2d grad = Eigen::Vector2d::Zero();
        Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double q = sigmoid(theta(0) * scores[i] + theta(1));
            const Eigen::Vector2d x(scores[i], 1.0);
            grad += (q - labels[i]) * x;
            hess += q * (1 - q) * x * x.transpose();
        }
        grad /= n;
        hess /= n;
        if (grad.norm() <= kPlattGradTol)
            break;

        Eigen::Vector2d step;
        Eigen::LDLT<Eigen::Matrix2d> ldlt(hess + 1e-12 * Eigen::Matrix2d::Identity());
        if (ldlt.info() == Eigen::Success && ldlt.isPositive())
            step = -ldlt.solve(grad);
        else
            step = -grad;
        if (step.dot(grad) >= 0)
            step = -grad;

        // Armijo backtracking.
        double t = 1.0;
        bool moved = false;
        for (int k = 0; k < 60; ++k, t *= 0.5) {
            const Eigen::Vector2d cand = theta + t * step;
            const double fc = platt_objective(scores, labels, cand(0), cand(1));
            if (fc <= f + 1e-4 * t * grad.dot(step)) {
                theta = cand;
                f = fc;
                moved = true;
                break;
            }
        }
        if (!moved)
            break;
    }
    return {theta(0), theta(1), false, iter};
}

ProbVector TemperatureModel::apply(const ProbVector& p, double eps) const
{
    Eigen::RowVectorXd z = p.vector().transpose().array().max(eps).min(1 - eps).log() / T;
    return ProbVector(Eigen::VectorXd(softmax_row(z).transpose()));
}

ProbMatrix TemperatureModel::apply(const ProbMatrix& probs, double eps) const
{
    Eigen::MatrixXd logp = clamped_log(probs, eps) / T;
    ProbMatrix out(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        out.row(i) = softmax_row(logp.row(i));
    return out;
}

double temperature_objective(const ProbMatrix& probs, std::span<const int> labels, double T,
                             double eps)
{
    const Eigen::MatrixXd logp = clamped_log(probs, eps);
    double total = 0;
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
        const Eigen::RowVectorXd z = logp.row(i) / T;
        const double top = z.maxCoeff();
        const double lse = top + std::log((z.array() - top).exp().sum());
        total += lse - z(labels[static_cast<std::size_t>(i)]);
    }
    return total / static_cast<double>(logp.rows());
}

TemperatureModel fit_temperature(const ProbMatrix& probs, std::span<const int> labels,
                                 double eps)
{
    if (probs.rows() == 0)
        throw std::invalid_argument("temperature scaling needs at least one example");
    if (static_cast<std::size_t>(probs.rows()) != labels.size())
        throw std::invalid_argument("prediction and label counts differ");

    auto f = [&](double T) { return temperature_objective(probs, labels, T, eps); };
    const double inv_phi = (std::sqrt(5.0) - 1) / 2;
    double lo = kMinTemperature, hi = kMaxTemperature;
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > kTemperatureTol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    double T = 0.5 * (lo + hi);
    double best = f(T);

    // Golden section only brackets interior minima; compare with the ends.
    TemperatureModel model{T, false};
    for (double edge : {kMinTemperature, kMaxTemperature}) {
        const double fe = f(edge);
        if (std::abs(edge - T) <= 2 * kTemperatureTol || fe < best) {
            model = {edge, true};
            best = std::min(best, fe);
        }
    }
    return model;
}

double IsotonicModel::apply_unclamped(double score) const
{
    if (values.empty())
        throw std::logic_error("isotonic model is empty");
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), score);
    if (it == breakpoints.begin())
        return values.front();
    return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double IsotonicModel::apply(double score, double eps) const
{
    return std::clamp(apply_unclamped(score), eps, 1 - eps);
}

IsotonicModel fit_isotonic(std::span<const double> scores, std::span<const double> targets,
                           std::span<const double> weights)
{
    if (scores.empty())
        throw std::invalid_argument("isotonic regression needs at least one example");
    if (scores.size() != targets.size() || (!weights.empty() && weights.size() != scores.size()))
        throw std::invalid_argument("isotonic inputs differ in length");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    struct Block {
        double x;
        double sum_wy;
        double sum_w;
        double mean() const { return sum_wy / sum_w; }
    };
    std::vector<Block> blocks;
    for (std::size_t i : order) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (!blocks.empty() && blocks.back().x == scores[i]) {
            blocks.back().sum_wy += w * targets[i];
            blocks.back().sum_w += w;
        } else {
            blocks.push_back({scores[i], w * targets[i], w});
        }
    }

    // Pool adjacent violators over tied-score groups. Each stack entry keeps
    // the index range [first, last] of groups it covers.
    struct Pool {
        std::size_t first, last;
        double sum_wy, sum_w;
    };
    std::vector<Pool> stack;
    for (std::size_t g = 0; g < blocks.size(); ++g) {
        stack.push_back({g, g, blocks[g].sum_wy, blocks[g].sum_w});
        while (stack.size() > 1) {
            const Pool& top = stack.back();
            const Pool& below = stack[stack.size() - 2];
            if (below.sum_wy / below.sum_w <= top.sum_wy / top.sum_w)
                break;
            Pool merged{below.first, top.last, below.sum_wy + top.sum_wy, below.sum_w + top.sum_w};
            stack.pop_back();
            stack.back() = merged;
        }
    }

    IsotonicModel model;
    for (const Pool& p : stack)
        for (std::size_t g = p.first; g <= p.last; ++g) {
            model.breakpoints.push_back(blocks[g].x);
            model.values.push_back(p.sum_wy / p.sum_w);
        }
    return model;
}

OvrPlatt fit_platt_ovr(const ProbMatrix& probs, std::span<const int> labels, double eps)
{
    OvrPlatt m;
    const Eigen::Index K = probs.cols();
    for (Eigen::Index k = (K == 2 ? 1 : 0); k < K; ++k) {
        std::vector<double> s(static_cast<std::size_t>(probs.rows()));
        std::vector<int> y(s.size());
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            s[static_cast<std::size_t>(i)] = logit(std::clamp(probs(i, k), eps, 1 - eps));
            y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] == k;
        }
        m.per_class.push_back(fit_platt(s, y, eps));
    }
    return m;
}

ProbMatrix OvrPlatt::apply(const ProbMatrix& probs, double eps) const
{
    ProbMatrix out(probs.rows(), probs.cols());
    if (probs.cols() == 2) {
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            const double q = per_class.at(0).apply(logit(std::clamp(probs(i, 1), eps, 1 - eps)), eps);
            out(i, 0) = 1 - q;
            out(i, 1) = q;
        }
        return out;
    }
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        for (Eigen::Index k = 0; k < probs.cols(); ++k)
            out(i, k) = per_class.at(static_cast<std::size_t>(k))
                            .apply(logit(std::clamp(probs(i, k), eps, 1 - eps)), eps);
    return renormalize_rows(std::move(out));
}

OvrIsotonic fit_isotonic_ovr(const ProbMatrix& probs, std::span<const int> labels)
{
    OvrIsotonic m;
    const Eigen::Index K = probs.cols();
    for (Eigen::Index k = (K == 2 ? 1 : 0); k < K; ++k) {
        std::vector<double> s(probs.col(k).data(), probs.col(k).data() + probs.rows());
        std::vector<double> t(s.size());
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = labels[i] == k ? 1.0 : 0.0;
        m.per_class.push_back(fit_isotonic(s, t));
    }
    return m;
}

ProbMatrix OvrIsotonic::apply(const ProbMatrix& probs, double eps) const
{
    ProbMatrix out(probs.rows(), probs.cols());
    if (probs.cols() == 2) {
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            const double q = per_class.at(0).apply(probs(i, 1), eps);
            out(i, 0) = 1 - q;
            out(i, 1) = q;
        }
        return out;
    }
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        for (Eigen::Index k = 0; k < probs.cols(); ++k)
            out(i, k) = per_class.at(static_cast<std::size_t>(k)).apply(probs(i, k), eps);
    return renormalize_rows(std::move(out));
}

}  // namespace pcal
