#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iscc/types.hpp"

namespace iscc {

/// dBm <-> linear milliwatt conversions. Rejects non-finite input.
double dbm_to_linear(double dbm);
double linear_to_dbm(double mw);

/// Tunables for the two-phase solver. All keys are optional in config files.
struct SolverOptions {
    double eps_mse = 1e-6;    // objective-reduction stop for both phases
    double eps_pc = 1e-4;     // relative power-violation tolerance
    double eps_sc = 1e-4;     // relative sensing-violation tolerance
    double admm_growth = 2.0;   // penalty multiplier when a violation persists
    double admm_decay = 0.5;    // penalty multiplier once within tolerance
    int admm_max_iter = 10000;  // per-device refinement cap
    int ao_max_iter = 20000;    // alternating-phase outer cap; the high-power
                                // scale mode contracts slowly, so leave room
                                // for the objective-reduction stop to trigger
    double admm_delta0 = 1.0;   // initial power penalty
    double admm_beta0 = 1.0;    // initial sensing penalty
    double penalty_min = 1e-8;  // penalty clamp range
    double penalty_max = 1e8;
    double denom_floor = 1e-10;  // amplitude-update denominator floor
    bool epa_printed_variant = false;  // sqrt(P_t)/N equal allocation instead of sqrt(P_t/N)
};

/// Full system description. Powers are stored linear (milliwatts); config
/// files accept dBm for the transmit cap and noise variances.
struct SystemConfig {
    int K = 5;    // devices
    int N = 64;   // subcarriers
    int M = 50;   // OFDM symbols per sensing frame
    int N_c = 16; // cyclic prefix length, samples

    double delta_f_hz = 156.25e3;  // subcarrier spacing
    double T_o_s = 8e-6;           // full symbol duration incl. prefix
    double f_c_hz = 1e10;          // carrier
    double c0_mps = 2.998e8;       // propagation speed

    double P_t_mw = 10.0;       // per-device transmit cap (10 dBm)
    double sigma_w2_mw = 0.01;  // uplink noise variance (-20 dBm)
    double sigma_z2_mw = 0.01;  // echo noise variance, defaults to sigma_w2

    std::vector<double> eta_m2;     // distance-accuracy thresholds, one per device
    std::vector<double> xi_m2s2;    // velocity-accuracy thresholds, one per device

    uint64_t seed = 1;

    // Channel geometry (defaults keep every delay inside the prefix).
    int comm_taps = 8;              // communication channel memory
    int interference_taps = 4;      // inter-device / direct-link memory at the radar receiver
    double alpha = 1.0;             // round-trip target attenuation used in budgets
    double interference_power = 0.0;  // power scale of echo interference taps
    bool normalize_response = true;   // keep the 1/sqrt(L) factor in the frequency response
    std::vector<int> roundtrip_delay;  // per-device target delay, samples

    SolverOptions solver;

    /// Throws ConfigError when any structural invariant fails
    /// (K >= 1, N >= 2, M >= 2, positive powers and spacings, prefix bounds,
    /// per-device vectors sized K, delays inside the prefix).
    void validate() const;

    /// Defaults with per-device vectors expanded for K devices.
    static SystemConfig defaults();
};

/// Per-device power floors implied by the accuracy thresholds.
/// All entries are linear milliwatts (rho is inverse milliwatts).
struct SensingBudget {
    std::vector<double> eta_prime;  // floor from the distance threshold
    std::vector<double> xi_prime;   // floor from the velocity threshold
    std::vector<double> rho_prime;  // binding floor, max of the two
    std::vector<double> rho;        // 1 / rho_prime, the inverse-power form
};

/// Map accuracy thresholds (eta_k, xi_k) and attenuation alpha to power floors.
/// Throws InfeasibleBudgetError naming the first device whose floor exceeds
/// the cap P_t; the message reports the required power and both inequality
/// readings so misconfigured thresholds are diagnosable.
SensingBudget derive_sensing_budget(const SystemConfig& cfg, const std::vector<double>& eta_m2,
                                    const std::vector<double>& xi_m2s2, double alpha);

/// Convenience overload using cfg.eta_m2 / cfg.xi_m2s2 / cfg.alpha.
SensingBudget derive_sensing_budget(const SystemConfig& cfg);

/// Accuracy thresholds that place the binding floor at `rho_prime` exactly
/// (used by threshold sweeps; inverse of derive_sensing_budget for one device).
void thresholds_for_floor(const SystemConfig& cfg, double alpha, double rho_prime_mw,
                          double& eta_out, double& xi_out);

/// JSON config file IO. Unknown keys are rejected, `eta`/`xi` accept a scalar
/// (broadcast to K devices) or a K-element array, powers are given in dBm.
SystemConfig load_config(const std::string& path);
SystemConfig config_from_json_text(const std::string& text);
void save_config(const SystemConfig& cfg, const std::string& path);

/// Fully resolved config as single-line JSON (embedded in output artifacts).
std::string config_to_json_text(const SystemConfig& cfg);

}  // namespace iscc
