// pcal: protected probabilistic classification from the command line.
//
//   pcal calibrate    --input preds.jsonl --output protected.jsonl
//   pcal prequential  --input preds.jsonl --output part1.jsonl --stop-after 500 --snapshot s.json
//   pcal simulate     --scenario concept_shift --seed 3 --output stream.csv
//   pcal experiment   --config battery.conf --output table.csv
//   pcal oracle-check --instances 100
//
// Exit codes: 0 ok, 1 domain error, 2 usage error.

#include "pcal/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct RunFlags {
    std::string config_file;
    std::optional<double> pi;
    std::optional<std::vector<double>> jump_rates, betas, alpha_magnitudes;
    std::optional<double> clamp_epsilon;
    std::optional<int> ece_bins;
    std::optional<std::string> ece_norm;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app)
    {
        app->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
        app->add_option("--pi", pi, "prior weight on the base forecaster, in (0, 1)");
        app->add_option("--jump-rates", jump_rates, "jump rates, each in (0, 1)")->delimiter(',');
        app->add_option("--betas", betas, "Cox beta values (must include 1)")->delimiter(',');
        app->add_option("--alpha-magnitudes", alpha_magnitudes, "one-hot alpha offsets")
            ->delimiter(',')
            ->expected(0, -1);
        app->add_option("--clamp-epsilon", clamp_epsilon, "probability clamp, in (0, 0.01]");
        app->add_option("--ece-bins", ece_bins, "equal-mass bins per class");
        app->add_option("--ece-norm", ece_norm, "l1 or l2")->check(CLI::IsMember({"l1", "l2"}));
        app->add_option("--seed", seed, "random seed");
    }

    pcal::RunConfig resolve() const
    {
        pcal::RunConfig c;
        if (!config_file.empty()) {
            auto file = pcal::KeyValueFile::load(config_file);
            c = pcal::read_run_config(file);
            file.finish();
        }
        if (pi) c.jumper.pi = *pi;
        if (jump_rates) c.jumper.jump_rates = *jump_rates;
        if (betas) c.jumper.betas = *betas;
        if (alpha_magnitudes) c.jumper.alpha_magnitudes = *alpha_magnitudes;
        if (clamp_epsilon) c.clamp_epsilon = *clamp_epsilon;
        if (ece_bins) c.ece_bins = *ece_bins;
        if (ece_norm) c.ece_norm = pcal::parse_ece_norm(*ece_norm);
        if (seed) c.seed = *seed;
        c.validate();
        return c;
    }
};

std::optional<pcal::StreamFormat> parse_format(const std::string& name)
{
    if (name.empty())
        return std::nullopt;
    return name == "csv" ? pcal::StreamFormat::csv : pcal::StreamFormat::jsonl;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Online protected calibration of probabilistic classifiers"};
    app.require_subcommand(1);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "protect a stream of base predictions");
    RunFlags cal_flags;
    cal_flags.attach(cal);
    pcal::CalibrateOptions cal_opts;
    std::string cal_input, cal_output, cal_report, cal_plots, cal_format;
    cal->add_option("--input,-i", cal_input, "stream of base predictions (.jsonl or .csv)")
        ->required()
        ->check(CLI::ExistingFile);
    cal->add_option("--format", cal_format, "input format")->check(CLI::IsMember({"jsonl", "csv"}));
    cal->add_option("--output,-o", cal_output, "per-step protected output")->required();
    cal->add_option("--report", cal_report, "JSON report path (default <output>.report.json)");
    cal->add_option("--plot-dir", cal_plots, "directory for reliability and loss csv series");
    cal->add_flag("--verbose-weights", cal_opts.verbose_weights, "emit per-calibrator weights");

    // prequential
    auto* pre = app.add_subcommand("prequential", "replay a stream one record at a time");
    RunFlags pre_flags;
    pre_flags.attach(pre);
    pcal::PrequentialOptions pre_opts;
    std::string pre_input, pre_output, pre_format, pre_snapshot, pre_resume;
    long pre_stop = -1;
    pre->add_option("--input,-i", pre_input)->required()->check(CLI::ExistingFile);
    pre->add_option("--format", pre_format)->check(CLI::IsMember({"jsonl", "csv"}));
    pre->add_option("--output,-o", pre_output, "per-step output for the processed segment")->required();
    pre->add_option("--stop-after", pre_stop, "stop once this many steps are done");
    pre->add_option("--snapshot", pre_snapshot, "write a state snapshot when finished");
    pre->add_option("--resume", pre_resume, "continue from a snapshot")->check(CLI::ExistingFile);
    pre->add_flag("--verbose-weights", pre_opts.verbose_weights);

    // simulate
    auto* sim = app.add_subcommand("simulate", "write a synthetic shifted prediction stream");
    pcal::SimulateOptions sim_opts;
    std::string sim_output, sim_scenario = "unperturbed", sim_model = "logistic", sim_format;
    bool sim_no_permute = false;
    sim->add_option("--output,-o", sim_output)->required();
    sim->add_option("--format", sim_format)->check(CLI::IsMember({"jsonl", "csv"}));
    sim->add_option("--scenario", sim_scenario)
        ->check(CLI::IsMember({"unperturbed", "concept_shift", "x_imbalance", "y_imbalance"}));
    sim->add_option("--model", sim_model)->check(CLI::IsMember({"logistic", "naive_bayes"}));
    sim->add_option("--classes", sim_opts.data.classes);
    sim->add_option("--n-features", sim_opts.data.n_features);
    sim->add_option("--n-informative", sim_opts.data.n_informative);
    sim->add_option("--n-train", sim_opts.data.n_train);
    sim->add_option("--n-test", sim_opts.data.n_test);
    sim->add_option("--separation", sim_opts.data.separation);
    sim->add_option("--affected-tail", sim_opts.scenario.affected_tail);
    sim->add_flag("--no-permute", sim_no_permute);
    sim->add_option("--seed", sim_opts.data.seed);
    sim->add_option("--clamp-epsilon", sim_opts.clamp_epsilon);

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a scenario battery and tabulate metrics");
    std::string exp_config, exp_output;
    exp->add_option("--config", exp_config)->required()->check(CLI::ExistingFile);
    exp->add_option("--output,-o", exp_output, "csv table (stdout if omitted)");

    // oracle-check
    auto* orc = app.add_subcommand("oracle-check", "compare the recursion with brute-force enumeration");
    pcal::OracleCheckOptions orc_opts;
    orc->add_option("--instances", orc_opts.instances);
    orc->add_option("--seed", orc_opts.seed);
    orc->add_option("--tolerance", orc_opts.tolerance);
    orc->add_option("--max-steps", orc_opts.max_steps);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*cal) {
            cal_opts.input = cal_input;
            cal_opts.format = parse_format(cal_format);
            cal_opts.output = cal_output;
            cal_opts.report = cal_report;
            if (!cal_plots.empty())
                cal_opts.plot_dir = cal_plots;
            cal_opts.config = cal_flags.resolve();
            const auto r = pcal::cmd_calibrate(cal_opts);
            std::cout << "records " << r.records << "\n"
                      << "             accuracy   brier      log_loss   ece\n"
                      << "base         " << r.base.accuracy << "  " << r.base.brier << "  "
                      << r.base.log_loss << "  " << r.base.ece << "\n"
                      << "protected    " << r.protected_.accuracy << "  " << r.protected_.brier
                      << "  " << r.protected_.log_loss << "  " << r.protected_.ece << "\n"
                      << "regret " << r.regret() << " (bound " << r.regret_bound << ")\n";
        } else if (*pre) {
            pre_opts.input = pre_input;
            pre_opts.format = parse_format(pre_format);
            pre_opts.output = pre_output;
            pre_opts.config = pre_flags.resolve();
            if (pre_stop >= 0)
                pre_opts.stop_after = pre_stop;
            if (!pre_snapshot.empty())
                pre_opts.snapshot_out = pre_snapshot;
            if (!pre_resume.empty())
                pre_opts.resume_from = pre_resume;
            const long steps = pcal::cmd_prequential(pre_opts);
            std::cout << "processed " << steps << " steps\n";
        } else if (*sim) {
            sim_opts.output = sim_output;
            sim_opts.format = parse_format(sim_format);
            sim_opts.scenario.kind = pcal::parse_scenario(sim_scenario);
            sim_opts.scenario.permute_after = !sim_no_permute;
            sim_opts.model = pcal::parse_model(sim_model);
            pcal::cmd_simulate(sim_opts);
        } else if (*exp) {
            if (exp_output.empty()) {
                pcal::cmd_experiment(exp_config, std::cout);
            } else {
                std::ofstream out(exp_output);
                if (!out)
                    throw std::runtime_error("cannot write " + exp_output);
                pcal::cmd_experiment(exp_config, out);
            }
        } else if (*orc) {
            const auto r = pcal::cmd_oracle_check(orc_opts, &std::cout);
            return r.ok() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "pcal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
