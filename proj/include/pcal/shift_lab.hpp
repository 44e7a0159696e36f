#ifndef PCAL_SHIFT_LAB_HPP
#define PCAL_SHIFT_LAB_HPP

// Synthetic classification data, two simple classifiers, and the four
// dataset-shift scenarios applied to the tail of a test set.

#include "pcal/jumper.hpp"
#include "pcal/metrics.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pcal {

struct SyntheticSpec {
    int n_features = 20;
    int n_informative = 4;
    int classes = 2;
    int n_train = 2000;
    int n_test = 1000;
    double separation = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    Eigen::MatrixXd X;
    std::vector<int> y;
    int classes = 0;

    Eigen::Index rows() const { return X.rows(); }
};

/// Gaussian clusters: each class gets a centroid at a distinct vertex of the
/// hypercube {-separation, +separation}^n_informative; informative features
/// are centroid + N(0, 1), the rest pure N(0, 1) noise. Labels are uniform
/// over classes, and the first `classes` training rows cover every class.
std::pair<Dataset, Dataset> generate(const SyntheticSpec& spec);

enum class ScenarioKind { unperturbed, concept_shift, x_imbalance, y_imbalance };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view name);

struct ShiftScenario {
    ScenarioKind kind = ScenarioKind::unperturbed;
    int affected_tail = 500;
    bool permute_after = true;
};

/// Transforms the last `affected_tail` rows, then optionally shuffles the
/// whole stream with `seed`.
///   concept_shift: flip binary labels in the tail
///   x_imbalance:   keep tail rows whose feature 0 is < 0
///   y_imbalance:   drop tail rows labelled 0
Dataset apply_scenario(const Dataset& test, const ShiftScenario& scenario, std::uint64_t seed);

enum class ModelKind { logistic_regression, gaussian_naive_bayes };

std::string_view to_string(ModelKind kind);
ModelKind parse_model(std::string_view name);

class SimpleModel {
public:
    ModelKind kind() const { return kind_; }
    int classes() const { return classes_; }

    ProbVector predict_proba(const Eigen::RowVectorXd& row) const;
    ProbMatrix predict_proba(const Eigen::MatrixXd& X) const;

private:
    friend SimpleModel fit_simple(ModelKind kind, const Dataset& train);

    Eigen::MatrixXd scores(const Eigen::MatrixXd& X) const;

    ModelKind kind_ = ModelKind::logistic_regression;
    int classes_ = 0;
    // logistic: weights (d x K) and bias (K)
    // naive bayes: means and variances (K x d), log priors (K)
    Eigen::MatrixXd weights_;
    Eigen::VectorXd bias_;
    Eigen::MatrixXd means_;
    Eigen::MatrixXd variances_;
};

/// Logistic regression: multinomial, full-batch gradient descent from zero,
/// L2 1e-4, 500 epochs. Naive Bayes: per-class Gaussians, variance floor 1e-9.
SimpleModel fit_simple(ModelKind kind, const Dataset& train);

enum class BaselineKind { none, platt, temperature, isotonic };

std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline(std::string_view name);

struct ExperimentCell {
    BaselineKind calibrator = BaselineKind::none;
    bool protected_run = false;
    std::vector<MetricsReport> per_seed;
    std::vector<double> cumulative_log_loss;  // per seed, sum of -ln p(y)
};

struct ExperimentResult {
    ScenarioKind scenario;
    ModelKind model;
    std::vector<std::uint64_t> seeds;
    std::vector<ExperimentCell> cells;

    const ExperimentCell& cell(BaselineKind calibrator, bool protected_run) const;
};

struct ExperimentSettings {
    SyntheticSpec data;
    ShiftScenario scenario;
    ModelKind model = ModelKind::logistic_regression;
    std::vector<BaselineKind> calibrators{BaselineKind::none};
    JumperParams protection;
    double clamp_epsilon = 1e-6;
    int ece_bins = 15;
    EceNorm ece_norm = EceNorm::l2;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

/// For each seed: generate data, fit the model on the first half of the
/// training rows, fit the baselines on the second half, shift the test set,
/// and score every calibrator with and without protection. Seeds run
/// concurrently; results do not depend on scheduling.
ExperimentResult run_scenario_experiment(const ExperimentSettings& settings);

}  // namespace pcal

#endif  // PCAL_SHIFT_LAB_HPP
