#pragma once

#include <span>
#include <vector>

#include "iscc/types.hpp"

namespace iscc {

/// A positive amplitude was requested on a subcarrier whose combined
/// channel-aggregation gain is exactly zero, so no phase can align it.
class DeadSubcarrierError : public std::runtime_error {
public:
    explicit DeadSubcarrierError(const std::string& what) : std::runtime_error(what) {}
};

/// Aggregation-error decomposition. `misalignment` and `noise` are the raw
/// sums the optimizer works with; `mse_bar` is their total and `mse` the
/// per-subcarrier averaged value with the 1/(N K^2) scaling applied.
struct MseBreakdown {
    double misalignment = 0.0;  // sum_n sum_k |W_n H_kn B_kn - 1|^2
    double noise = 0.0;         // sigma_w^2 sum_n |W_n|^2
    double mse_bar = 0.0;
    double mse = 0.0;
};

/// |H| magnitudes (the aligned problem only sees these).
RGrid channel_gains(const CGrid& H);

/// Give each amplitude the phase conj(W_n H_kn)/|W_n H_kn| so the through
/// gain W_n H_kn B_kn is real nonnegative. Zero amplitudes pass through as
/// zero; a positive amplitude on a dead subcarrier raises DeadSubcarrierError.
CGrid align_phase(const RGrid& amplitudes, const CGrid& H, std::span<const cplx> W);

/// Aggregation error of an arbitrary complex design.
MseBreakdown mse_objective(const CGrid& B, const CGrid& H, std::span<const cplx> W, double sigma_w2);

/// Per-subcarrier MMSE aggregation weight for a fixed design:
///   W_n = sum_k conj(H_kn B_kn) / (sum_k |B_kn|^2 |H_kn|^2 + sigma_w^2).
/// The conjugate keeps the weight optimal for unaligned complex designs; for
/// phase-aligned designs it reduces to the real ratio.
std::vector<cplx> optimal_aggregation(const CGrid& B, const CGrid& H, double sigma_w2);

/// Phase-aligned (all-real) counterparts used throughout the optimizer.
std::vector<double> aligned_aggregation(const RGrid& amplitudes, const RGrid& gains, double sigma_w2);
MseBreakdown aligned_mse(const RGrid& amplitudes, const RGrid& gains, std::span<const double> w,
                         double sigma_w2);

/// Best amplitudes under a total-power cap only:
///   minimize sum_n (a_n b_n - 1)^2  s.t.  sum_n b_n^2 <= cap.
/// Interior solution b_n = 1/a_n when it fits, otherwise the ridge family
/// b_n = a_n/(a_n^2 + mu) with mu chosen by bisection to land on the cap.
struct RidgeAllocation {
    std::vector<double> amplitudes;
    double multiplier = 0.0;  // 0 when the cap is slack
};
RidgeAllocation capped_ridge_allocation(std::span<const double> a, double power_cap);

/// High-power behavior on one fixed channel: re-solve the power-only joint
/// problem on an increasing power grid and report the error totals and the
/// largest aggregation magnitude at each point, plus the two monotonicity
/// verdicts (error shrinks, aggregation weights shrink toward zero).
struct AsymptoticCheck {
    std::vector<double> power_grid;
    std::vector<double> mse_bar;
    std::vector<double> max_w;
    bool mse_decreasing = false;
    bool w_shrinking = false;
};
AsymptoticCheck asymptotic_mse_check(const CGrid& H, double sigma_w2, std::span<const double> power_grid);

}  // namespace iscc
