#pragma once

#include <span>
#include <string>
#include <vector>

#include "iscc/aircomp.hpp"
#include "iscc/config.hpp"
#include "iscc/types.hpp"

namespace iscc {

/// One amplitude step of the alternating phase could not produce any point
/// satisfying both the power cap and the linearized accuracy floor.
class ScaStepError : public std::runtime_error {
public:
    explicit ScaStepError(const std::string& what) : std::runtime_error(what) {}
};

/// Aggregation step of the alternating phase: with amplitudes frozen the best
/// weights are exactly the per-subcarrier MMSE ratio, so this delegates to
/// optimal_aggregation unchanged.
std::vector<cplx> solve_p11(const CGrid& B, const CGrid& H, double sigma_w2);

/// Amplitude step for one device with the aggregation frozen:
///   minimize sum_n (a_n b_n - 1)^2
///   s.t.     sum_n b_n^2 <= power_cap
///            2 <reference, b> >= floor + ||reference||^2   (linearized power floor)
/// a_n = w_n * gain_kn >= 0. `reference` is the expansion point; it is always
/// kept as a fallback candidate so the step never increases the objective.
/// The tangent plane lies inside the true floor region, so any output also
/// satisfies sum_n b_n^2 >= floor. Solved exactly by enumerating the four
/// active-set cases of the first-order conditions.
std::vector<double> solve_p12_sca(std::span<const double> a, double power_cap, double floor,
                                  std::span<const double> reference);

/// One row of a solver trace. `phase` is "ao" or "admm"; `device` is -1 for
/// whole-system rows. Dual/penalty columns are zero outside the refinement.
struct SolveTraceRow {
    int iteration = 0;
    std::string phase;
    int device = -1;
    double mse_bar = 0.0;
    double gamma_pv = 0.0;
    double gamma_sv = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double delta = 0.0;
    double beta = 0.0;
};

struct AoResult {
    RGrid amplitudes;              // K x N
    std::vector<double> w;         // aligned aggregation, refreshed on the final amplitudes
    std::vector<double> mse_trace; // recorded once per sweep plus the final refresh
    int iterations = 0;
    bool converged = false;
    std::vector<SolveTraceRow> trace;
};

/// Alternating phase: start from the uniform floor allocation (or `init` when
/// given), then repeat (aggregation update, per-device amplitude step) until
/// the objective drop falls below opts.eps_mse. Ends with a final aggregation
/// refresh so the returned weights match the returned amplitudes exactly.
AoResult run_ao_phase(const RGrid& gains, const SensingBudget& budget, double power_cap,
                      double sigma_w2, const SolverOptions& opts, const RGrid* init = nullptr);

/// Augmented-Lagrangian pieces for the per-device refinement (all per device;
/// S = sum_n b_n^2, rho = hard lower bound on S).
///
/// Primal: coordinatewise b_n = a_n / D_n with
///   D_n = a_n^2 + 2 delta [lambda + delta (S - cap)]_+ - 2 beta [mu + beta (1/S - rho... )]_+ / S^2
/// evaluated at the incoming iterate's S. A nonpositive or tiny D_n is
/// reported through `denominator_ok=false` so the caller can back off.
struct PrimalUpdate {
    std::vector<double> b;
    bool denominator_ok = true;
};
PrimalUpdate admm_primal_update(std::span<const double> b, std::span<const double> a, double power_cap,
                                double rho, double lambda, double mu, double delta, double beta,
                                double denom_floor);

/// Duals: projected ascent on the two hinge terms, plus the relative violations.
struct DualUpdate {
    double lambda = 0.0;
    double mu = 0.0;
    double gamma_pv = 0.0;  // max(0, S - cap)/cap
    double gamma_sv = 0.0;  // max(0, 1/S - rho)/rho
};
DualUpdate admm_dual_update(double lambda, double mu, double S, double power_cap, double rho,
                            double delta, double beta);

/// Penalties: grow when the matching violation exceeds its tolerance, decay
/// otherwise, clamped to [opts.penalty_min, opts.penalty_max].
void admm_penalty_update(double& delta, double& beta, double gamma_pv, double gamma_sv,
                         const SolverOptions& opts);

/// Augmented Lagrangian value the updates descend (per device):
///   f(b) + ([lambda + delta g]_+^2 - lambda^2)/(2 delta)
///        + ([mu + beta h]_+^2 - mu^2)/(2 beta)
/// with f = sum (a b - 1)^2, g = S - cap, h = 1/S - rho.
double admm_lagrangian(std::span<const double> b, std::span<const double> a, double power_cap,
                       double rho, double lambda, double mu, double delta, double beta);

struct DeviceRefineResult {
    std::vector<double> b;      // accepted amplitudes (best feasible, or the input if none better)
    int iterations = 0;
    bool converged = false;     // all three termination conditions met
    bool mse_ok = false;
    bool pv_ok = false;
    bool sv_ok = false;
    bool improved = false;      // accepted iterate beats the input objective
    double objective = 0.0;     // sum_n (a_n b_n - 1)^2 at the accepted iterate
};

struct AdmmResult {
    RGrid amplitudes;
    std::vector<DeviceRefineResult> devices;
    bool warning = false;  // some device hit the iteration cap before converging
    std::vector<SolveTraceRow> trace;
};

/// Refinement phase: with the aggregation frozen, sweep the devices once in
/// order and run the penalty-method iteration on each. Only iterates inside
/// the tolerance band around both constraints count as candidates, and a
/// device keeps its incoming amplitudes unless a candidate strictly improves
/// its objective — so the refined design is never worse than the input.
AdmmResult run_admm_phase(const RGrid& amplitudes0, std::span<const double> w, const RGrid& gains,
                          const SensingBudget& budget, double power_cap, double sigma_w2,
                          const SolverOptions& opts);

/// Equal power on every subcarrier at the cap. The conventional form puts
/// sqrt(cap/N) on each subcarrier; the variant divides sqrt(cap) by N instead
/// (total power cap/N) and is kept behind the same switch as in SolverOptions.
RGrid baseline_epa(int K, int N, double power_cap, bool printed_variant = false);

/// Channel-inversion allocation truncated to the band [sqrt(floor/N), sqrt(cap/N)]:
/// b_kn = clamp(1/|W_n H_kn|). The aggregation it inverts is made self-consistent
/// by a short fixed-point: start from the equal-power design's weights and
/// re-derive them from the truncated inversion once more.
RGrid baseline_opas(const CGrid& H, const SensingBudget& budget, double power_cap, double sigma_w2);

struct SolveReport {
    RGrid amplitudes;                    // final K x N nonnegative amplitudes
    std::vector<cplx> aggregation;       // MMSE weights for the final amplitudes
    CGrid complex_tx;                    // phase-aligned complex coefficients
    MseBreakdown breakdown;              // evaluated at (amplitudes, aggregation)
    std::vector<SolveTraceRow> trace;    // both phases, in order
    int ao_iterations = 0;
    bool ao_converged = false;
    std::vector<DeviceRefineResult> refinement;  // empty when the second phase is skipped
    bool refine_warning = false;
    double ao_seconds = 0.0;
    double refine_seconds = 0.0;
};

/// Full solver: alternating phase, then (optionally) the per-device
/// refinement with the aggregation frozen, then a final weight refresh.
SolveReport solve_two_phase(const CGrid& H, const SensingBudget& budget, const SystemConfig& cfg,
                            bool with_refinement = true);

/// MMSE weights for a real amplitude design on a complex channel, and the
/// resulting error breakdown. This is how every method (proposed, alternating
/// only, equal power, truncated inversion) is scored in experiments.
MseBreakdown evaluate_design(const RGrid& amplitudes, const CGrid& H, double sigma_w2);

}  // namespace iscc
