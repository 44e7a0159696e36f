#ifndef PCAL_COMMANDS_HPP
#define PCAL_COMMANDS_HPP

// Command implementations behind the pcal CLI, plus the prequential
// (predict-one / learn-one) driver.

#include "pcal/run_config.hpp"
#include "pcal/shift_lab.hpp"
#include "pcal/stream_io.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pcal {

struct CalibrationRun {
    std::vector<StepOutcome> outcomes;
    std::vector<StepWeights> weights;  // after each step's update
    JumperState final_state;
};

CalibrationRun calibrate_stream(const LabeledStream& stream, const JumperConfig& config);

struct CalibrateReport {
    long records = 0;
    Eigen::Index classes = 0;
    MetricsReport base;
    MetricsReport protected_;
    double cumulative_base = 0;       // sum of -ln p(y)
    double cumulative_protected = 0;
    double regret_bound = 0;          // ln(1 / pi)
    ReliabilityCurve base_curve;
    ReliabilityCurve protected_curve;

    double regret() const { return cumulative_protected - cumulative_base; }
};

CalibrateReport summarize(const LabeledStream& stream, const CalibrationRun& run,
                          const RunConfig& config);
std::string report_json(const CalibrateReport& report, const RunConfig& config,
                        std::size_t grid_size);

struct CalibrateOptions {
    std::filesystem::path input;
    std::optional<StreamFormat> format;  // inferred from the extension if unset
    std::filesystem::path output;
    std::filesystem::path report;        // defaults to <output>.report.json
    std::optional<std::filesystem::path> plot_dir;
    bool verbose_weights = false;
    RunConfig config;
};

/// Writes the per-step protected stream, the JSON report and, optionally,
/// plot series (reliability curves and cumulative log loss) as csv.
CalibrateReport cmd_calibrate(const CalibrateOptions& options);

class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Serves one prediction at a time; the label for step n may only be
/// supplied after the prediction for step n was requested.
class PrequentialDriver {
public:
    explicit PrequentialDriver(JumperConfig config);
    PrequentialDriver(JumperConfig config, JumperState state);

    ProbVector predict_one(const ProbVector& p);
    StepOutcome learn_one(int y);

    /// Index of the next step to be predicted (1-based).
    long next_step() const { return state_.step_count + 1; }
    bool awaiting_label() const { return pending_.has_value(); }
    const JumperState& state() const { return state_; }
    const JumperConfig& config() const { return config_; }

    /// Only between steps; throws ProtocolError while a label is pending.
    void checkpoint(const std::filesystem::path& path) const;
    static PrequentialDriver resume(JumperConfig config, const std::filesystem::path& path);

private:
    struct Pending {
        ProbVector base;
        ProbVector protected_p;
        MixedState mixed;
    };

    JumperConfig config_;
    JumperState state_;
    std::optional<Pending> pending_;
};

struct PrequentialOptions {
    std::filesystem::path input;
    std::optional<StreamFormat> format;
    std::filesystem::path output;
    RunConfig config;
    std::optional<long> stop_after;  // checkpoint after this many total steps
    std::optional<std::filesystem::path> snapshot_out;
    std::optional<std::filesystem::path> resume_from;
    bool verbose_weights = false;
};

/// Replays a stream record by record through PrequentialDriver. Returns the
/// number of steps processed in this invocation.
long cmd_prequential(const PrequentialOptions& options);

struct SimulateOptions {
    SyntheticSpec data;
    ShiftScenario scenario;
    ModelKind model = ModelKind::logistic_regression;
    double clamp_epsilon = 1e-6;
    std::filesystem::path output;
    std::optional<StreamFormat> format;
};

/// Generates data, fits the model on the training set and writes its
/// predictions on the shifted test stream.
LabeledStream simulate_stream(const SimulateOptions& options);
void cmd_simulate(const SimulateOptions& options);

struct ExperimentPlan {
    std::vector<ScenarioKind> scenarios{ScenarioKind::unperturbed};
    std::vector<ModelKind> models{ModelKind::logistic_regression};
    ExperimentSettings settings;  // scenario.kind and model are overwritten per cell
};

/// Config keys: scenarios, models, calibrators, seeds, classes, n_features,
/// n_informative, n_train, n_test, separation, affected_tail, permute, and
/// every RunConfig key.
ExperimentPlan read_experiment_plan(KeyValueFile& file);

std::vector<ExperimentResult> run_experiment_plan(const ExperimentPlan& plan);

/// Columns: scenario, classifier, calibrator, protected, metric, mean, then
/// one column per seed.
void write_experiment_table(std::ostream& out, const std::vector<ExperimentResult>& results);

std::vector<ExperimentResult> cmd_experiment(const std::filesystem::path& config_path,
                                             std::ostream& table_out);

struct OracleCheckOptions {
    int instances = 100;
    std::uint64_t seed = 0;
    double tolerance = 1e-9;
    int max_steps = 6;
    int max_thetas = 4;
    int max_rates = 2;
};

struct OracleCheckReport {
    int passed = 0;
    int total = 0;
    double max_error = 0;
    double max_prior_error = 0;

    bool ok() const { return passed == total; }
};

/// Random tiny instances: K in {2, 3}, random grid with the neutral member
/// first, random pi and jump rates, random streams. Compares process_stream
/// with brute-force enumeration at every step.
OracleCheckReport cmd_oracle_check(const OracleCheckOptions& options, std::ostream* log = nullptr);

}  // namespace pcal

#endif  // PCAL_COMMANDS_HPP
