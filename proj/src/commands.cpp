#include "pcal/commands.hpp"

#include "pcal/oracle.hpp"
#include "pcal/snapshot.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

namespace pcal {

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

nlohmann::ordered_json metrics_json(const MetricsReport& m)
{
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["brier"] = m.brier;
    j["log_loss"] = m.log_loss;
    j["ece"] = m.ece;
    j["auc"] = m.auc ? nlohmann::ordered_json(*m.auc) : nlohmann::ordered_json(nullptr);
    j["n"] = m.n;
    return j;
}

void write_reliability(const std::filesystem::path& path, const ReliabilityCurve& curve)
{
    auto out = open_out(path);
    out << "class,bin,mean_predicted,frequency,weight\n";
    for (std::size_t k = 0; k < curve.per_class.size(); ++k)
        for (std::size_t b = 0; b < curve.per_class[k].size(); ++b) {
            const auto& bin = curve.per_class[k][b];
            out << k << ',' << b << ',' << format_double(bin.mean_predicted) << ','
                << format_double(bin.frequency) << ',' << format_double(bin.weight) << '\n';
        }
}

StepWeights weights_of(const JumperState& s) { return {s.P, s.theta_weights()}; }

}  // namespace

CalibrationRun calibrate_stream(const LabeledStream& stream, const JumperConfig& config)
{
    if (!stream.empty() && stream.classes != config.classes())
        throw std::invalid_argument("stream has " + std::to_string(stream.classes) +
                                    " classes, config expects " +
                                    std::to_string(config.classes()));
    CompositeJumper jumper(config);
    CalibrationRun run;
    run.outcomes.reserve(stream.size());
    run.weights.reserve(stream.size());
    for (const auto& r : stream.records) {
        run.outcomes.push_back(jumper.step(r.p, r.y));
        run.weights.push_back(weights_of(jumper.state()));
    }
    run.final_state = jumper.state();
    return run;
}

CalibrateReport summarize(const LabeledStream& stream, const CalibrationRun& run,
                          const RunConfig& config)
{
    if (stream.empty())
        throw std::invalid_argument("cannot summarize an empty stream");
    const auto labels = stream.labels();
    std::vector<ProbVector> prot;
    prot.reserve(run.outcomes.size());
    for (const auto& o : run.outcomes)
        prot.push_back(o.protected_p);
    const ProbMatrix base_m = stack_rows(stream.probs());
    const ProbMatrix prot_m = stack_rows(prot);

    CalibrateReport r;
    r.records = static_cast<long>(stream.size());
    r.classes = stream.classes;
    r.base = evaluate(base_m, labels, config.ece_bins, config.ece_norm);
    r.protected_ = evaluate(prot_m, labels, config.ece_bins, config.ece_norm);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        r.cumulative_base -= std::log(stream.records[i].p(labels[i]));
        r.cumulative_protected -= std::log(prot[i](labels[i]));
    }
    r.regret_bound = std::log(1.0 / config.jumper.pi);
    r.base_curve = reliability(base_m, labels, config.ece_bins);
    r.protected_curve = reliability(prot_m, labels, config.ece_bins);
    return r;
}

std::string report_json(const CalibrateReport& report, const RunConfig& config,
                        std::size_t grid_size)
{
    nlohmann::ordered_json j;
    j["records"] = report.records;
    j["classes"] = report.classes;
    nlohmann::ordered_json cfg;
    cfg["pi"] = config.jumper.pi;
    cfg["jump_rates"] = config.jumper.jump_rates;
    cfg["betas"] = config.jumper.betas;
    cfg["alpha_magnitudes"] = config.jumper.alpha_magnitudes;
    cfg["grid_size"] = grid_size;
    cfg["clamp_epsilon"] = config.clamp_epsilon;
    cfg["ece_bins"] = config.ece_bins;
    cfg["ece_norm"] = std::string(to_string(config.ece_norm));
    j["config"] = std::move(cfg);
    j["base"] = metrics_json(report.base);
    j["protected"] = metrics_json(report.protected_);
    j["cumulative_log_loss"] = {{"base", report.cumulative_base},
                                {"protected", report.cumulative_protected}};
    j["regret"] = report.regret();
    j["regret_bound"] = report.regret_bound;
    return j.dump(2) + "\n";
}

CalibrateReport cmd_calibrate(const CalibrateOptions& o)
{
    o.config.validate();
    const StreamFormat fmt = o.format.value_or(format_for(o.input));
    const LabeledStream stream = parse_stream(o.input, fmt, o.config.clamp_epsilon);
    if (stream.empty())
        throw std::invalid_argument("input stream " + o.input.string() + " has no records");
    const JumperConfig jc = o.config.jumper_config(stream.classes);
    const CalibrationRun run = calibrate_stream(stream, jc);
    const CalibrateReport report = summarize(stream, run, o.config);

    {
        auto out = open_out(o.output);
        emit_protected(out, stream, run.outcomes, format_for(o.output),
                       o.verbose_weights ? &run.weights : nullptr);
    }
    {
        const auto report_path =
            o.report.empty() ? std::filesystem::path(o.output.string() + ".report.json") : o.report;
        auto out = open_out(report_path);
        out << report_json(report, o.config, jc.grid.size());
    }
    if (o.plot_dir) {
        write_reliability(*o.plot_dir / "reliability_base.csv", report.base_curve);
        write_reliability(*o.plot_dir / "reliability_protected.csv", report.protected_curve);
        auto out = open_out(*o.plot_dir / "cumulative_log_loss.csv");
        out << "step,base,protected\n";
        double cb = 0, cp = 0;
        for (std::size_t i = 0; i < stream.size(); ++i) {
            const int y = stream.records[i].y;
            cb -= std::log(stream.records[i].p(y));
            cp -= std::log(run.outcomes[i].protected_p(y));
            out << i + 1 << ',' << format_double(cb) << ',' << format_double(cp) << '\n';
        }
    }
    return report;
}

PrequentialDriver::PrequentialDriver(JumperConfig config)
    : config_(std::move(config)), state_(init(config_))
{
}

PrequentialDriver::PrequentialDriver(JumperConfig config, JumperState state)
    : config_(std::move(config)), state_(std::move(state))
{
    config_.validate();
}

ProbVector PrequentialDriver::predict_one(const ProbVector& p)
{
    if (pending_)
        throw ProtocolError("step " + std::to_string(next_step()) +
                            ": prediction already served, label required before the next prediction");
    auto [protected_p, mixed] = predict(config_, state_, p);
    pending_ = Pending{p, protected_p, std::move(mixed)};
    return protected_p;
}

StepOutcome PrequentialDriver::learn_one(int y)
{
    if (!pending_)
        throw ProtocolError("step " + std::to_string(next_step()) +
                            ": label supplied before a prediction was requested");
    auto [next, C] = update(pending_->mixed, pending_->base, y);
    StepOutcome out{pending_->protected_p, pending_->base, C};
    state_ = std::move(next);
    pending_.reset();
    return out;
}

void PrequentialDriver::checkpoint(const std::filesystem::path& path) const
{
    if (pending_)
        throw ProtocolError("step " + std::to_string(next_step()) +
                            ": cannot checkpoint while a label is pending");
    save_snapshot(path, config_, state_);
}

PrequentialDriver PrequentialDriver::resume(JumperConfig config, const std::filesystem::path& path)
{
    JumperState state = load_snapshot(path, config);
    return PrequentialDriver(std::move(config), std::move(state));
}

long cmd_prequential(const PrequentialOptions& o)
{
    o.config.validate();
    const StreamFormat fmt = o.format.value_or(format_for(o.input));
    const LabeledStream stream = parse_stream(o.input, fmt, o.config.clamp_epsilon);
    if (stream.empty())
        throw std::invalid_argument("input stream " + o.input.string() + " has no records");
    const JumperConfig jc = o.config.jumper_config(stream.classes);
    if (o.stop_after && !o.snapshot_out)
        throw std::invalid_argument("stopping early requires a snapshot path");

    PrequentialDriver driver =
        o.resume_from ? PrequentialDriver::resume(jc, *o.resume_from) : PrequentialDriver(jc);
    const auto first = static_cast<std::size_t>(driver.state().step_count);
    if (first > stream.size())
        throw std::invalid_argument("snapshot is past the end of the stream");
    std::size_t last = stream.size();
    if (o.stop_after) {
        if (*o.stop_after < static_cast<long>(first))
            throw std::invalid_argument("checkpoint step precedes the resumed state");
        last = std::min(last, static_cast<std::size_t>(*o.stop_after));
    }

    LabeledStream segment{stream.classes, {}};
    std::vector<StepOutcome> outcomes;
    std::vector<StepWeights> weights;
    for (std::size_t i = first; i < last; ++i) {
        const auto& r = stream.records[i];
        driver.predict_one(r.p);
        outcomes.push_back(driver.learn_one(r.y));
        weights.push_back(weights_of(driver.state()));
        segment.records.push_back(r);
    }
    {
        auto out = open_out(o.output);
        emit_protected(out, segment, outcomes, format_for(o.output),
                       o.verbose_weights ? &weights : nullptr);
    }
    if (o.snapshot_out)
        driver.checkpoint(*o.snapshot_out);
    return static_cast<long>(last - first);
}

LabeledStream simulate_stream(const SimulateOptions& o)
{
    auto [train, test] = generate(o.data);
    const SimpleModel model = fit_simple(o.model, train);
    const Dataset shifted = apply_scenario(test, o.scenario, o.data.seed);
    const ProbMatrix probs = model.predict_proba(shifted.X);

    LabeledStream stream{shifted.classes, {}};
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        stream.records.push_back({clamp_renormalize<double>(probs.row(i).transpose(), o.clamp_epsilon),
                                  shifted.y[static_cast<std::size_t>(i)],
                                  std::to_string(i)});
    return stream;
}

void cmd_simulate(const SimulateOptions& o)
{
    const LabeledStream stream = simulate_stream(o);
    auto out = open_out(o.output);
    emit_stream(out, stream, o.format.value_or(format_for(o.output)));
}

ExperimentPlan read_experiment_plan(KeyValueFile& file)
{
    ExperimentPlan plan;
    const RunConfig rc = read_run_config(file);
    auto& s = plan.settings;
    s.protection = rc.jumper;
    s.clamp_epsilon = rc.clamp_epsilon;
    s.ece_bins = rc.ece_bins;
    s.ece_norm = rc.ece_norm;

    plan.scenarios.clear();
    for (const auto& name : file.strings("scenarios", {"unperturbed"}))
        plan.scenarios.push_back(parse_scenario(name));
    plan.models.clear();
    for (const auto& name : file.strings("models", {"logistic"}))
        plan.models.push_back(parse_model(name));
    s.calibrators.clear();
    for (const auto& name : file.strings("calibrators", {"base"}))
        s.calibrators.push_back(parse_baseline(name));
    s.seeds.clear();
    for (double v : file.numbers("seeds", {0, 1, 2, 3, 4})) {
        if (v < 0 || v != std::floor(v))
            throw std::invalid_argument("seeds must be nonnegative integers");
        s.seeds.push_back(static_cast<std::uint64_t>(v));
    }

    s.data.classes = static_cast<int>(file.integer("classes", s.data.classes));
    s.data.n_features = static_cast<int>(file.integer("n_features", s.data.n_features));
    s.data.n_informative = static_cast<int>(file.integer("n_informative", s.data.n_informative));
    s.data.n_train = static_cast<int>(file.integer("n_train", s.data.n_train));
    s.data.n_test = static_cast<int>(file.integer("n_test", s.data.n_test));
    s.data.separation = file.number("separation", s.data.separation);
    s.scenario.affected_tail = static_cast<int>(file.integer("affected_tail", s.scenario.affected_tail));
    s.scenario.permute_after = file.flag("permute", s.scenario.permute_after);
    file.finish();

    if (plan.scenarios.empty() || plan.models.empty() || s.calibrators.empty() || s.seeds.empty())
        throw std::invalid_argument("experiment lists must not be empty");
    s.data.validate();
    for (auto sc : plan.scenarios)
        if (sc == ScenarioKind::concept_shift && s.data.classes != 2)
            throw std::invalid_argument("concept shift is defined for binary labels only");
    if (s.scenario.affected_tail > s.data.n_test)
        throw std::invalid_argument("affected_tail exceeds n_test");
    return plan;
}

std::vector<ExperimentResult> run_experiment_plan(const ExperimentPlan& plan)
{
    std::vector<ExperimentResult> out;
    for (ScenarioKind sc : plan.scenarios)
        for (ModelKind m : plan.models) {
            ExperimentSettings s = plan.settings;
            s.scenario.kind = sc;
            s.model = m;
            out.push_back(run_scenario_experiment(s));
        }
    return out;
}

void write_experiment_table(std::ostream& out, const std::vector<ExperimentResult>& results)
{
    out << "scenario,classifier,calibrator,protected,metric,mean";
    if (!results.empty())
        for (auto seed : results.front().seeds)
            out << ",seed_" << seed;
    out << '\n';

    using Getter = double (*)(const MetricsReport&);
    const std::pair<const char*, Getter> metrics[] = {
        {"log_loss", [](const MetricsReport& m) { return m.log_loss; }},
        {"brier", [](const MetricsReport& m) { return m.brier; }},
        {"ece", [](const MetricsReport& m) { return m.ece; }},
        {"accuracy", [](const MetricsReport& m) { return m.accuracy; }},
    };
    for (const auto& res : results)
        for (const auto& cell : res.cells)
            for (const auto& [name, get] : metrics) {
                double mean = 0;
                for (const auto& m : cell.per_seed)
                    mean += get(m);
                mean /= static_cast<double>(cell.per_seed.size());
                out << to_string(res.scenario) << ',' << to_string(res.model) << ','
                    << to_string(cell.calibrator) << ',' << (cell.protected_run ? "protected" : "standard")
                    << ',' << name << ',' << format_double(mean);
                for (const auto& m : cell.per_seed)
                    out << ',' << format_double(get(m));
                out << '\n';
            }
}

std::vector<ExperimentResult> cmd_experiment(const std::filesystem::path& config_path,
                                             std::ostream& table_out)
{
    KeyValueFile file = KeyValueFile::load(config_path);
    const ExperimentPlan plan = read_experiment_plan(file);
    auto results = run_experiment_plan(plan);
    write_experiment_table(table_out, results);
    return results;
}

OracleCheckReport cmd_oracle_check(const OracleCheckOptions& o, std::ostream* log)
{
    if (o.instances < 1 || o.max_steps < 1 || o.max_thetas < 1 || o.max_rates < 1)
        throw std::invalid_argument("oracle check limits must be positive");
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    OracleCheckReport report;
    for (int inst = 0; inst < o.instances; ++inst) {
        const int K = uniform_int(2, 3);
        const int n = uniform_int(1, o.max_steps);
        const int n_theta = uniform_int(1, o.max_thetas);
        const int n_rates = uniform_int(1, o.max_rates);

        std::vector<ThetaParams> thetas{ThetaParams::neutral(K)};
        while (static_cast<int>(thetas.size()) < n_theta) {
            Eigen::VectorXd alpha(K);
            for (int k = 0; k < K; ++k)
                alpha(k) = 4 * unit(rng) - 2;
            ThetaParams cand(alpha, 0.25 + 2.75 * unit(rng));
            bool dup = false;
            for (const auto& t : thetas)
                dup = dup || t.equivalent(cand);
            if (!dup)
                thetas.push_back(std::move(cand));
        }
        JumperConfig config{0.05 + 0.9 * unit(rng), {}, ThetaGrid(std::move(thetas))};
        while (static_cast<int>(config.jump_rates.size()) < n_rates) {
            const double J = 0.01 + 0.98 * unit(rng);
            if (std::find(config.jump_rates.begin(), config.jump_rates.end(), J) ==
                config.jump_rates.end())
                config.jump_rates.push_back(J);
        }

        std::vector<ProbVector> probs;
        std::vector<Eigen::VectorXd> raw;
        std::vector<int> labels;
        for (int t = 0; t < n; ++t) {
            Eigen::VectorXd v(K);
            for (int k = 0; k < K; ++k)
                v(k) = 0.02 + unit(rng);
            v /= v.sum();
            probs.emplace_back(v);
            raw.push_back(probs.back().vector());
            labels.push_back(uniform_int(0, K - 1));
        }

        const auto engine = process_stream(config, probs, labels);
        const auto brute = oracle::enumerate_predict(config, raw, labels, static_cast<std::size_t>(n));
        double err = 0;
        for (int t = 0; t < n; ++t)
            err = std::max(err, (engine.outcomes[static_cast<std::size_t>(t)].protected_p.vector() -
                                 brute[static_cast<std::size_t>(t)])
                                    .cwiseAbs()
                                    .maxCoeff());
        const double prior_err =
            std::abs(oracle::prior_mass(config, static_cast<std::size_t>(n)) - 1.0);

        ++report.total;
        const bool pass = err < o.tolerance && prior_err < 1e-9;
        report.passed += pass;
        report.max_error = std::max(report.max_error, err);
        report.max_prior_error = std::max(report.max_prior_error, prior_err);
        if (log && !pass)
            *log << "instance " << inst << " (K=" << K << ", n=" << n << ", |Theta|=" << n_theta
                 << ", |J|=" << n_rates << "): max error " << err << ", prior error " << prior_err
                 << '\n';
    }
    if (log)
        *log << report.passed << "/" << report.total << " instances match within " << o.tolerance
             << " (max error " << report.max_error << ")\n";
    return report;
}

}  // namespace pcal
