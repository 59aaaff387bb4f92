#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/types.hpp"

namespace iscc {

/// Declarative description of one batch run. `grid` meaning depends on the
/// experiment: transmit cap in dBm (power_sweep), threshold scale factor
/// (threshold_sweep), or subcarrier count (subcarrier_sweep).
struct ExperimentSpec {
    std::string id;  // power_sweep | threshold_sweep | subcarrier_sweep
    std::vector<double> grid;
    int n_draws = 200;
    std::vector<std::string> methods{"proposed", "sca", "opas", "epa"};
    std::string out_path;
    bool no_timing = false;  // write zero runtimes for byte-stable artifacts
    int n_threads = 1;
};

struct ResultRow {
    std::string method;
    double grid_value = 0.0;
    double mean_mse_bar = 0.0;
    double std_err = 0.0;
    double mean_mse = 0.0;  // with the 1/(N K^2) scaling
    double mean_runtime_ms = 0.0;
    double feasibility_rate = 0.0;
    int draws_used = 0;  // feasible draws contributing to the means
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<double> infeasible_grid_values;  // accuracy floor above the cap
};

/// Deterministic strided partition of [0, n_items) over worker threads.
/// Results must go to disjoint slots; the partition depends only on counts,
/// so output is schedule independent.
void parallel_for(int n_items, int n_threads, const std::function<void(int)>& fn);

/// Run one sweep: per grid value and channel draw, design amplitudes with
/// each method, score everything with the MMSE weights for its own design,
/// and aggregate means over the draws that land inside the constraint band.
/// Channel draws are keyed by draw index only, so every grid value and method
/// sees the same channels.
ResultTable run_experiment(const ExperimentSpec& spec, const SystemConfig& cfg);

/// Write a result table as CSV with '#' metadata lines (resolved config,
/// seed, spec) so the artifact is reproducible from its own header.
void write_result_csv(const ResultTable& table, const ExperimentSpec& spec, const SystemConfig& cfg,
                      const std::string& path);

/// Single-draw full solver trace (both phases) written as CSV; per-device
/// refinement summaries and termination flags go into the metadata lines.
void run_convergence_trace(const SystemConfig& cfg, const std::string& path, bool no_timing);

/// --- Oracle checks (shared by `validate` and the acceptance suite) ---

/// Exhaustive minimum of the joint design over an amplitude lattice with the
/// weights re-derived at every lattice point. `resolution_bound` bounds how
/// far the lattice minimum can sit above the continuum minimum (first-order
/// bound evaluated at the lattice minimizer, doubled for the feasibility
/// detour), so  solver <= grid_min + resolution_bound  is the dominance test.
struct GridOracleResult {
    double grid_min_mse_bar = 0.0;
    double resolution_bound = 0.0;
    long feasible_points = 0;
};
GridOracleResult brute_force_grid_min(const RGrid& gains, double power_cap,
                                      std::span<const double> floors, double sigma_w2, double step);

/// Largest objective decrease achievable by nudging any closed-form
/// aggregation weight by +-delta (real and imaginary axes) over random scalar
/// instances; a correct formula keeps this at numerical-noise level.
/// `mutate` deliberately mis-scales the weights (negative control).
double max_aggregation_improvement(uint64_t seed, int instances, double delta, bool mutate);

/// Monte-Carlo agreement between the waveform-level aggregation error and the
/// closed-form breakdown on one solved instance.
struct EmpiricalAgreement {
    double analytic = 0.0;
    double empirical = 0.0;
    double std_err = 0.0;
    double z_score = 0.0;  // |empirical - analytic| / std_err
};
EmpiricalAgreement empirical_agreement_check(const SystemConfig& cfg, int n_trials, uint64_t seed);

/// Closed-form bounds vs numerical Fisher inversion across size grids:
/// log-log slopes fitted against N(N^2-1) (distance bound over `n_values`)
/// and M(M^2-1) (velocity bound over `m_values`); both should sit at -1.
/// The constant closed-form/numerical ratio is recorded, not asserted.
struct CrlbScalingCheck {
    double slope_distance_vs_n = 0.0;
    double slope_velocity_vs_m = 0.0;
    double ratio_distance = 0.0;  // closed form / numerical, averaged
    double ratio_velocity = 0.0;
};
CrlbScalingCheck crlb_scaling_check(const SystemConfig& cfg, std::span<const int> n_values,
                                    std::span<const int> m_values, double total_power_mw);

/// Median relative error of the pulse-compressed observation against the
/// decoupled mean model, pooled over subcarriers and draws, per burst length.
struct DecouplingResiduals {
    std::vector<int> m_values;
    std::vector<double> medians;
};
DecouplingResiduals decoupling_residual_sweep(const SystemConfig& cfg, std::span<const int> m_values,
                                              int n_draws, uint64_t seed);

/// One named pass/fail outcome with the measured value and its limit.
struct ValidationCheck {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double limit = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_pass = false;
};

/// Fast end-to-end oracle run: waveform-vs-analytic agreement, bound-scaling
/// slopes, decoupled-model residual, small-instance grid dominance, and the
/// aggregation-optimality perturbation probe. `mutate_aggregation` corrupts
/// the weights inside the perturbation probe so the suite must fail (negative
/// control for the harness wiring).
ValidationReport run_validation_suite(const SystemConfig& cfg, bool mutate_aggregation);

}  // namespace iscc
