#include "pcal/shift_lab.hpp"

#include "pcal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <stdexcept>

namespace pcal {

namespace {

constexpr double kLogisticL2 = 1e-4;
constexpr int kLogisticEpochs = 500;
constexpr double kLogisticStep = 0.5;
constexpr double kVarianceFloor = 1e-9;
constexpr double kPi = 3.14159265358979323846;

// Separate streams for data generation and shuffling so that the same seed
// does not correlate them.
constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd z)
{
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        z.row(i) = (z.row(i).array() - z.row(i).maxCoeff()).exp();
        z.row(i) /= z.row(i).sum();
    }
    return z;
}

Dataset take_rows(const Dataset& d, const std::vector<Eigen::Index>& rows)
{
    Dataset out;
    out.classes = d.classes;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
    out.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = d.X.row(rows[i]);
        out.y.push_back(d.y[static_cast<std::size_t>(rows[i])]);
    }
    return out;
}

Dataset slice(const Dataset& d, Eigen::Index first, Eigen::Index count)
{
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(count));
    std::iota(rows.begin(), rows.end(), first);
    return take_rows(d, rows);
}

}  // namespace

void SyntheticSpec::validate() const
{
    if (n_features < 1 || n_informative < 1 || n_train < 1 || n_test < 1)
        throw std::invalid_argument("synthetic spec counts must be positive");
    if (n_informative > n_features)
        throw std::invalid_argument("n_informative cannot exceed n_features");
    if (classes < 2)
        throw std::invalid_argument("synthetic data needs at least 2 classes");
    if (n_informative < 31 && (1L << n_informative) < classes)
        throw std::invalid_argument("need 2^n_informative >= classes for distinct centroids");
    if (n_train < classes)
        throw std::invalid_argument("n_train must cover every class");
    if (!(separation >= 0))
        throw std::invalid_argument("separation must be nonnegative");
}

std::pair<Dataset, Dataset> generate(const SyntheticSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    // Distinct hypercube vertices via a partial Fisher-Yates over vertex ids.
    const int inf = std::min(spec.n_informative, 30);
    const std::uint64_t vertices = 1ULL << inf;
    std::vector<std::uint64_t> chosen;
    while (static_cast<int>(chosen.size()) < spec.classes) {
        std::uniform_int_distribution<std::uint64_t> pick(0, vertices - 1);
        const auto v = pick(rng);
        if (std::find(chosen.begin(), chosen.end(), v) == chosen.end())
            chosen.push_back(v);
    }
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(spec.classes, spec.n_features);
    for (int c = 0; c < spec.classes; ++c)
        for (int f = 0; f < inf; ++f)
            centroids(c, f) = ((chosen[static_cast<std::size_t>(c)] >> f) & 1U) ? spec.separation
                                                                                 : -spec.separation;

    std::uniform_int_distribution<int> label(0, spec.classes - 1);
    auto draw = [&](int n, bool cover_classes) {
        Dataset d;
        d.classes = spec.classes;
        d.X.resize(n, spec.n_features);
        d.y.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const int y = cover_classes && i < spec.classes ? i : label(rng);
            d.y[static_cast<std::size_t>(i)] = y;
            for (int f = 0; f < spec.n_features; ++f)
                d.X(i, f) = centroids(y, f) + noise(rng);
        }
        return d;
    };
    Dataset train = draw(spec.n_train, true);
    Dataset test = draw(spec.n_test, false);
    return {std::move(train), std::move(test)};
}

std::string_view to_string(ScenarioKind kind)
{
    switch (kind) {
    case ScenarioKind::unperturbed: return "unperturbed";
    case ScenarioKind::concept_shift: return "concept_shift";
    case ScenarioKind::x_imbalance: return "x_imbalance";
    case ScenarioKind::y_imbalance: return "y_imbalance";
    }
    return "?";
}

ScenarioKind parse_scenario(std::string_view name)
{
    for (auto k : {ScenarioKind::unperturbed, ScenarioKind::concept_shift,
                   ScenarioKind::x_imbalance, ScenarioKind::y_imbalance})
        if (to_string(k) == name)
            return k;
    throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

Dataset apply_scenario(const Dataset& test, const ShiftScenario& scenario, std::uint64_t seed)
{
    const Eigen::Index n = test.rows();
    if (scenario.affected_tail < 0 || scenario.affected_tail > n)
        throw std::invalid_argument("affected tail exceeds the test set");
    if (scenario.kind == ScenarioKind::concept_shift && test.classes != 2)
        throw std::invalid_argument("concept shift is defined for binary labels only");

    const Eigen::Index tail_start = n - scenario.affected_tail;
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool in_tail = i >= tail_start;
        if (in_tail && scenario.kind == ScenarioKind::x_imbalance && !(test.X(i, 0) < 0))
            continue;
        if (in_tail && scenario.kind == ScenarioKind::y_imbalance &&
            test.y[static_cast<std::size_t>(i)] == 0)
            continue;
        keep.push_back(i);
    }
    Dataset out = take_rows(test, keep);
    if (scenario.kind == ScenarioKind::concept_shift)
        for (std::size_t i = static_cast<std::size_t>(tail_start); i < out.y.size(); ++i)
            out.y[i] = 1 - out.y[i];

    if (scenario.permute_after) {
        std::vector<Eigen::Index> order(out.y.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(seed ^ kShuffleSalt);
        std::shuffle(order.begin(), order.end(), rng);
        out = take_rows(out, order);
    }
    return out;
}

std::string_view to_string(ModelKind kind)
{
    return kind == ModelKind::logistic_regression ? "logistic" : "naive_bayes";
}

ModelKind parse_model(std::string_view name)
{
    if (name == "logistic" || name == "logistic_regression")
        return ModelKind::logistic_regression;
    if (name == "naive_bayes" || name == "gaussian_naive_bayes" || name == "gnb")
        return ModelKind::gaussian_naive_bayes;
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

Eigen::MatrixXd SimpleModel::scores(const Eigen::MatrixXd& X) const
{
    if (X.cols() != (kind_ == ModelKind::logistic_regression ? weights_.rows() : means_.cols()))
        throw std::invalid_argument("feature count does not match the fitted model");
    if (kind_ == ModelKind::logistic_regression)
        return (X * weights_).rowwise() + bias_.transpose();

    Eigen::MatrixXd s(X.rows(), classes_);
    for (int c = 0; c < classes_; ++c) {
        const Eigen::RowVectorXd mu = means_.row(c);
        const Eigen::RowVectorXd var = variances_.row(c);
        const double log_norm = -0.5 * (var.array() * 2 * kPi).log().sum();
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            s(i, c) = bias_(c) + log_norm -
                      0.5 * ((X.row(i) - mu).array().square() / var.array()).sum();
    }
    return s;
}

ProbMatrix SimpleModel::predict_proba(const Eigen::MatrixXd& X) const
{
    return softmax_rows(scores(X));
}

ProbVector SimpleModel::predict_proba(const Eigen::RowVectorXd& row) const
{
    const Eigen::MatrixXd p = predict_proba(Eigen::MatrixXd(row));
    return ProbVector(Eigen::VectorXd(p.row(0).transpose()));
}

SimpleModel fit_simple(ModelKind kind, const Dataset& train)
{
    if (train.rows() == 0)
        throw std::invalid_argument("training set is empty");
    const int K = train.classes;
    std::vector<int> counts(static_cast<std::size_t>(std::max(K, 0)), 0);
    for (int y : train.y) {
        if (y < 0 || y >= K)
            throw std::out_of_range("training label outside [0, classes)");
        ++counts[static_cast<std::size_t>(y)];
    }
    if (std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) < 2)
        throw std::invalid_argument("training data must contain at least 2 classes");

    SimpleModel m;
    m.kind_ = kind;
    m.classes_ = K;
    const Eigen::Index n = train.rows(), d = train.X.cols();

    if (kind == ModelKind::logistic_regression) {
        Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, K);
        for (Eigen::Index i = 0; i < n; ++i)
            Y(i, train.y[static_cast<std::size_t>(i)]) = 1;
        m.weights_ = Eigen::MatrixXd::Zero(d, K);
        m.bias_ = Eigen::VectorXd::Zero(K);
        for (int epoch = 0; epoch < kLogisticEpochs; ++epoch) {
            const Eigen::MatrixXd residual = (m.predict_proba(train.X) - Y) / static_cast<double>(n);
            const Eigen::MatrixXd grad_w = train.X.transpose() * residual + kLogisticL2 * m.weights_;
            const Eigen::VectorXd grad_b = residual.colwise().sum().transpose();
            m.weights_ -= kLogisticStep * grad_w;
            m.bias_ -= kLogisticStep * grad_b;
        }
        return m;
    }

    m.means_ = Eigen::MatrixXd::Zero(K, d);
    m.variances_ = Eigen::MatrixXd::Constant(K, d, 1.0);
    m.bias_ = Eigen::VectorXd::Constant(K, -std::numeric_limits<double>::infinity());
    for (int c = 0; c < K; ++c) {
        const int nc = counts[static_cast<std::size_t>(c)];
        if (nc == 0)
            continue;
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i)
            if (train.y[static_cast<std::size_t>(i)] == c)
                sum += train.X.row(i);
        const Eigen::RowVectorXd mean = sum / nc;
        Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i)
            if (train.y[static_cast<std::size_t>(i)] == c)
                sq += (train.X.row(i) - mean).array().square().matrix();
        m.means_.row(c) = mean;
        m.variances_.row(c) = (sq / nc).array().max(kVarianceFloor).matrix();
        m.bias_(c) = std::log(static_cast<double>(nc) / static_cast<double>(n));
    }
    return m;
}

std::string_view to_string(BaselineKind kind)
{
    switch (kind) {
    case BaselineKind::none: return "base";
    case BaselineKind::platt: return "platt";
    case BaselineKind::temperature: return "temperature";
    case BaselineKind::isotonic: return "isotonic";
    }
    return "?";
}

BaselineKind parse_baseline(std::string_view name)
{
    for (auto k : {BaselineKind::none, BaselineKind::platt, BaselineKind::temperature,
                   BaselineKind::isotonic})
        if (to_string(k) == name)
            return k;
    if (name == "none")
        return BaselineKind::none;
    throw std::invalid_argument("unknown calibrator '" + std::string(name) + "'");
}

const ExperimentCell& ExperimentResult::cell(BaselineKind calibrator, bool protected_run) const
{
    for (const auto& c : cells)
        if (c.calibrator == calibrator && c.protected_run == protected_run)
            return c;
    throw std::out_of_range("experiment has no such cell");
}

namespace {

struct SeedCells {
    // Indexed like settings.calibrators, standard then protected.
    std::vector<MetricsReport> standard, protected_;
    std::vector<double> standard_cum, protected_cum;
};

std::vector<ProbVector> clamp_rows(const ProbMatrix& m, double eps)
{
    std::vector<ProbVector> rows;
    rows.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        rows.push_back(clamp_renormalize<double>(m.row(i).transpose(), eps));
    return rows;
}

double cumulative_log_loss(const std::vector<ProbVector>& rows, const std::vector<int>& y)
{
    double total = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        total -= std::log(rows[i](y[i]));
    return total;
}

SeedCells run_seed(const ExperimentSettings& s, std::uint64_t seed)
{
    SyntheticSpec spec = s.data;
    spec.seed = seed;
    auto [train, test] = generate(spec);

    const Eigen::Index fit_rows = train.rows() / 2;
    const Dataset fit_split = slice(train, 0, fit_rows);
    const Dataset cal_split = slice(train, fit_rows, train.rows() - fit_rows);
    const SimpleModel model = fit_simple(s.model, fit_split);

    const Dataset stream = apply_scenario(test, s.scenario, seed);
    const ProbMatrix cal_probs = stack_rows(clamp_rows(model.predict_proba(cal_split.X), s.clamp_epsilon));
    const ProbMatrix test_probs = stack_rows(clamp_rows(model.predict_proba(stream.X), s.clamp_epsilon));
    const JumperConfig config = s.protection.for_classes(spec.classes);

    SeedCells out;
    for (BaselineKind kind : s.calibrators) {
        ProbMatrix variant;
        switch (kind) {
        case BaselineKind::none: variant = test_probs; break;
        case BaselineKind::platt:
            variant = fit_platt_ovr(cal_probs, cal_split.y, s.clamp_epsilon).apply(test_probs, s.clamp_epsilon);
            break;
        case BaselineKind::temperature:
            variant = fit_temperature(cal_probs, cal_split.y, s.clamp_epsilon).apply(test_probs, s.clamp_epsilon);
            break;
        case BaselineKind::isotonic:
            variant = fit_isotonic_ovr(cal_probs, cal_split.y).apply(test_probs, s.clamp_epsilon);
            break;
        }
        const auto rows = clamp_rows(variant, s.clamp_epsilon);
        const ProbMatrix standard = stack_rows(rows);
        out.standard.push_back(evaluate(standard, stream.y, s.ece_bins, s.ece_norm));
        out.standard_cum.push_back(cumulative_log_loss(rows, stream.y));

        const auto run = process_stream(config, rows, stream.y);
        std::vector<ProbVector> prot;
        prot.reserve(run.outcomes.size());
        for (const auto& o : run.outcomes)
            prot.push_back(o.protected_p);
        out.protected_.push_back(evaluate(stack_rows(prot), stream.y, s.ece_bins, s.ece_norm));
        out.protected_cum.push_back(cumulative_log_loss(prot, stream.y));
    }
    return out;
}

}  // namespace

ExperimentResult run_scenario_experiment(const ExperimentSettings& settings)
{
    settings.data.validate();
    if (settings.seeds.empty())
        throw std::invalid_argument("experiment needs at least one seed");
    if (settings.calibrators.empty())
        throw std::invalid_argument("experiment needs at least one calibrator");
    if (settings.scenario.kind == ScenarioKind::concept_shift && settings.data.classes != 2)
        throw std::invalid_argument("concept shift is defined for binary labels only");
    if (settings.scenario.affected_tail > settings.data.n_test)
        throw std::invalid_argument("affected tail exceeds the test set");
    settings.protection.for_classes(settings.data.classes);

    std::vector<std::future<SeedCells>> jobs;
    for (std::uint64_t seed : settings.seeds)
        jobs.push_back(std::async(std::launch::async, run_seed, std::cref(settings), seed));

    ExperimentResult result{settings.scenario.kind, settings.model, settings.seeds, {}};
    for (BaselineKind kind : settings.calibrators)
        for (bool prot : {false, true})
            result.cells.push_back({kind, prot, {}, {}});

    for (auto& job : jobs) {
        const SeedCells sc = job.get();
        for (std::size_t c = 0; c < settings.calibrators.size(); ++c) {
            result.cells[2 * c].per_seed.push_back(sc.standard[c]);
            result.cells[2 * c].cumulative_log_loss.push_back(sc.standard_cum[c]);
            result.cells[2 * c + 1].per_seed.push_back(sc.protected_[c]);
            result.cells[2 * c + 1].cumulative_log_loss.push_back(sc.protected_cum[c]);
        }
    }
    return result;
}

}  // namespace pcal
