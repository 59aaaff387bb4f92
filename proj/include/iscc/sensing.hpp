#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/types.hpp"

namespace iscc {

/// Reduced Fisher block is singular (e.g. zero signal), no bound exists.
class RankDeficientError : public std::runtime_error {
public:
    explicit RankDeficientError(const std::string& what) : std::runtime_error(what) {}
};

/// Closed-form lower bound on distance-estimate variance (m^2):
///   3 sigma_z^2 c0^2 / (8 pi^2 df^2 ||B||^2 alpha^2 M N (N^2 - 1)).
/// `power` is the transmit energy across subcarriers ||B_k||^2.
double crlb_distance(double sigma_z2, double c0_mps, double delta_f_hz, double power, double alpha, int M,
                     int N);

/// Closed-form lower bound on velocity-estimate variance (m^2/s^2):
///   3 sigma_z2 c0^2 / (8 pi^2 T_o^2 f_c^2 ||B||^2 alpha^2 M N (M^2 - 1)).
double crlb_velocity(double sigma_z2, double c0_mps, double T_o_s, double f_c_hz, double power, double alpha,
                     int M, int N);

/// Echo model parameters, order (tau_bar, v_bar, alpha, psi) throughout.
/// tau_bar is the per-subcarrier delay phase increment 2 pi df tau, v_bar the
/// per-symbol Doppler phase increment 2 pi T_o f_d. P is the matched-filter
/// length; it only shifts the known phase reference and is never estimated.
struct SensingParams {
    double tau_bar = 0.0;
    double v_bar = 0.0;
    double alpha = 1.0;
    double psi = 0.0;
    int P = 0;

    static SensingParams from_physical(const SystemConfig& cfg, double d_m, double v_mps, double alpha,
                                       double psi, int P);
    double distance_m(const SystemConfig& cfg) const;   // c0 tau_bar / (4 pi df)
    double velocity_mps(const SystemConfig& cfg) const; // c0 v_bar / (4 pi T_o f_c)
    double doppler_hz(const SystemConfig& cfg) const;   // v_bar / (2 pi T_o)
    bool narrowband_ok(const SystemConfig& cfg) const;  // |f_d| <= 0.05 df
};

/// Post-matched-filter mean signal at symbol m, subcarrier n:
///   alpha b_n exp(j (m v_bar - n (tau_bar + 2 pi P / N) + psi)).
cplx echo_signal_mean(const SensingParams& theta, std::span<const double> amplitudes, int m, int n);

/// theta -> complex mean per (m, n); the amplitude profile lives in the closure.
using SignalMeanFn = std::function<cplx(const SensingParams&, int m, int n)>;

struct FisherMatrix {
    // Full information over all M x N observations, order (tau_bar, v_bar, alpha, psi):
    //   J_ij = (1/sigma_z^2) sum_m sum_n Re( conj(dA/dtheta_i) dA/dtheta_j ).
    std::array<std::array<double, 4>, 4> full{};
    // Per-symbol reduced blocks (full restricted rows/cols, averaged over M):
    // delay keeps (tau_bar, alpha, psi), Doppler keeps (v_bar, alpha, psi).
    std::array<std::array<double, 3>, 3> delay_block{};
    std::array<std::array<double, 3>, 3> doppler_block{};
};

/// Fisher information via central finite differences of `mean`
/// (step 1e-5 * max(1, |theta_i|) per coordinate).
FisherMatrix numerical_fisher(const SignalMeanFn& mean, const SensingParams& theta0, double sigma_z2, int M,
                              int N);

/// Fisher information for the echo model with exact analytic derivatives.
/// This is the primary oracle path; numerical_fisher cross-checks it.
FisherMatrix analytic_fisher(const SensingParams& theta0, std::span<const double> amplitudes,
                             double sigma_z2, int M, int N);

/// Variance bounds from the reduced blocks: invert the block and apply the
/// 1/(MN) estimate-averaging factor. Throws RankDeficientError when a block
/// is singular. Units are squared normalized phases (tau_bar^2, v_bar^2).
struct AveragedCrlb {
    double var_tau_bar = 0.0;
    double var_v_bar = 0.0;
};
AveragedCrlb averaged_crlb_from_fisher(const FisherMatrix& F, int M, int N);

/// Convert the normalized-phase bounds to physical units.
double distance_variance_from_tau_bar(double var_tau_bar, const SystemConfig& cfg);   // m^2
double velocity_variance_from_v_bar(double var_v_bar, const SystemConfig& cfg);       // m^2/s^2

/// CSV export: one row per (device, power) pair with both closed-form bounds
/// and the binding power floor. '#' metadata lines carry the resolved config.
void export_crlb_table(const SystemConfig& cfg, const std::vector<double>& powers_mw,
                       const std::string& path);

}  // namespace iscc
