#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iscc/config.hpp"
#include "iscc/experiment.hpp"
#include "iscc/sensing.hpp"
#include "iscc/types.hpp"

namespace {

std::vector<double> default_grid(const std::string& experiment) {
    if (experiment == "power_sweep") return {10.0, 20.0, 30.0, 40.0, 50.0, 60.0};
    if (experiment == "threshold_sweep") return {0.25, 0.5, 1.0, 2.0, 4.0};
    if (experiment == "subcarrier_sweep") return {16.0, 32.0, 64.0, 128.0};
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint multicarrier sensing, uplink aggregation, and power-allocation simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    int draws = 200;
    int threads = 1;
    bool no_timing = false;

    // run
    auto* run = app.add_subcommand(
        "run", "Run a sweep experiment (power_sweep | threshold_sweep | subcarrier_sweep) or the "
               "single-draw convergence trace");
    std::string experiment;
    std::string out_dir = ".";
    std::vector<std::string> methods{"proposed", "sca", "opas", "epa"};
    std::vector<double> grid;
    run->add_option("experiment", experiment, "Experiment id")
        ->required()
        ->check(CLI::IsMember({"power_sweep", "threshold_sweep", "subcarrier_sweep", "convergence"}));
    run->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    auto* run_seed = run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--draws", draws, "Channel draws per grid value")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory (CSV named after the experiment)");
    run->add_option("--methods", methods, "Comma-separated methods: proposed,sca,opas,epa")
        ->delimiter(',');
    run->add_option("--grid", grid, "Comma-separated grid values (defaults per experiment)")
        ->delimiter(',');
    run->add_flag("--no-timing", no_timing, "Write zero runtimes for byte-stable output");
    run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    // validate
    auto* validate = app.add_subcommand("validate", "Run the oracle validation suite");
    bool mutate_aggregation = false;
    validate->add_option("--config", config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* val_seed = validate->add_option("--seed", seed, "Override the config seed");
    validate->add_flag("--mutate-aggregation", mutate_aggregation,
                       "Corrupt the closed-form aggregation weights inside the optimality probe "
                       "(negative control; the suite must fail)");

    // trace
    auto* trace = app.add_subcommand("trace", "Write the full two-phase solver trace for one draw");
    std::string trace_out;
    trace->add_option("--config", config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* trace_seed = trace->add_option("--seed", seed, "Override the config seed");
    trace->add_option("--out", trace_out, "Output CSV file")->required();
    trace->add_flag("--no-timing", no_timing, "Write zero runtimes for byte-stable output");

    // crlb
    auto* crlb = app.add_subcommand("crlb", "Export closed-form estimation bounds per device");
    std::string crlb_out;
    std::vector<double> powers{1.0};
    crlb->add_option("--config", config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    crlb->add_option("--out", crlb_out, "Output CSV file")->required();
    crlb->add_option("--powers", powers, "Comma-separated per-device total powers in mW")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        iscc::SystemConfig cfg = iscc::load_config(config_path);
        if (run_seed->count() || val_seed->count() || trace_seed->count()) cfg.seed = seed;

        if (run->parsed()) {
            if (experiment == "convergence") {
                const std::string path = out_dir + "/convergence.csv";
                iscc::run_convergence_trace(cfg, path, no_timing);
                std::printf("wrote %s\n", path.c_str());
                return 0;
            }
            iscc::ExperimentSpec spec;
            spec.id = experiment;
            spec.grid = grid.empty() ? default_grid(experiment) : grid;
            spec.n_draws = draws;
            spec.methods = methods;
            spec.out_path = out_dir + "/" + experiment + ".csv";
            spec.no_timing = no_timing;
            spec.n_threads = threads;
            const iscc::ResultTable table = iscc::run_experiment(spec, cfg);
            iscc::write_result_csv(table, spec, cfg, spec.out_path);
            for (double v : table.infeasible_grid_values)
                std::fprintf(stderr,
                             "warning: grid value %g infeasible (power floor above the cap)\n", v);
            std::printf("wrote %s (%zu grid values, %d draws)\n", spec.out_path.c_str(),
                        spec.grid.size(), spec.n_draws);
            if (table.infeasible_grid_values.size() == spec.grid.size()) return 3;
            return 0;
        }
        if (validate->parsed()) {
            const iscc::ValidationReport report = iscc::run_validation_suite(cfg, mutate_aggregation);
            for (const auto& c : report.checks)
                std::printf("[%s] %-24s measured=%-12.5g limit=%-10.5g %s\n",
                            c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.limit,
                            c.detail.c_str());
            std::printf("%s\n", report.all_pass ? "validation suite passed"
                                                : "validation suite FAILED");
            return report.all_pass ? 0 : 2;
        }
        if (trace->parsed()) {
            iscc::run_convergence_trace(cfg, trace_out, no_timing);
            std::printf("wrote %s\n", trace_out.c_str());
            return 0;
        }
        if (crlb->parsed()) {
            iscc::export_crlb_table(cfg, powers, crlb_out);
            std::printf("wrote %s\n", crlb_out.c_str());
            return 0;
        }
    } catch (const iscc::InfeasibleBudgetError& e) {
        std::fprintf(stderr, "infeasible config: %s\n", e.what());
        return 3;
    } catch (const iscc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
