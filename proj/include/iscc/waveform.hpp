#pragma once

#include <span>
#include <vector>

#include "iscc/channel.hpp"
#include "iscc/config.hpp"
#include "iscc/rng.hpp"
#include "iscc/sensing.hpp"
#include "iscc/types.hpp"

namespace iscc {

/// One multicarrier symbol for every device: data, per-subcarrier transmit
/// coefficients applied, time samples (unitary inverse DFT of each row), and
/// the prefix-extended sequence that actually goes over the air.
struct OfdmFrame {
    CGrid data;          // K x N unit-variance symbols
    CGrid freq_symbols;  // K x N, coefficient * data
    CGrid time_samples;  // K x N
    CGrid cp_extended;   // K x (N + cp_length)
    int cp_length = 0;
};

/// I.i.d. circular-Gaussian unit-variance data for one symbol.
CGrid draw_data(int K, int N, RngStream& stream);

/// Assemble a frame from per-subcarrier coefficients and data. The prefix
/// copies the tail samples so delayed paths wrap circularly inside the
/// receive window.
OfdmFrame make_frame(const CGrid& coefficients, const CGrid& data, int cp_length);

/// Superpose every device's frame through its uplink channel, add receiver
/// noise, strip the prefix, and DFT back to per-subcarrier observations.
/// Rejects channels whose memory exceeds the prefix.
std::vector<cplx> simulate_uplink(const OfdmFrame& frame, const CommChannel& comm, double sigma_w2,
                                  RngStream& stream);

/// Monte Carlo estimate of the aggregation error: per trial draw fresh data
/// and noise, form the scaled aggregate (1/K) W_n Y_n, and compare with the
/// true data mean, averaging |error|^2 over subcarriers. Returns the mean
/// over trials and its standard error.
struct EmpiricalMse {
    double mean = 0.0;
    double std_err = 0.0;
    int trials = 0;
};
EmpiricalMse empirical_aircomp_mse(const CGrid& complex_tx, std::span<const cplx> W,
                                   const CommChannel& comm, double sigma_w2, int n_trials,
                                   RngStream& stream);

/// Radar receive windows for one device across a sensing burst: the m-th row
/// is the prefix-stripped time window of symbol m, containing the device's
/// own target echo (with per-symbol Doppler rotation e^{j 2 pi m T_o f_d} and
/// random phase psi), every other device's leakage paths, and noise.
/// `frames` supplies one transmitted frame per symbol (fresh data each).
CGrid simulate_echo(const std::vector<OfdmFrame>& frames, const SensingChannels& sens, int device,
                    double doppler_hz, double psi, double T_o_s, double sigma_z2, RngStream& stream);

/// Correlation filters for one device: for symbol m the filter is the
/// conjugated time-reversed data sequence c*[(P - s) mod N] built from that
/// symbol's own data row.
struct MatchedFilterBank {
    CGrid filters;  // M x N time-domain filter coefficients
    int length = 0; // P
};
MatchedFilterBank make_filter_bank(const CGrid& device_data, int filter_length);

/// Per-symbol pulse compression: circularly convolve each receive window with
/// that symbol's filter, DFT, and scale by sqrt(N)/P. Row m of the result is
/// the symbol-m frequency-domain sensing observation.
CGrid matched_filter_outputs(const CGrid& echo_windows, const MatchedFilterBank& bank);

/// Average the per-symbol outputs over the burst (the long-run concentration
/// step), giving one length-N observation vector.
std::vector<cplx> matched_filter_and_dft(const CGrid& echo_windows, const MatchedFilterBank& bank);

/// Mean observation grid predicted by the decoupled model, entry (m, n) for a
/// burst of M symbols.
CGrid decoupling_model(const SensingParams& theta, std::span<const double> amplitudes, int M, int N);

/// Entrywise relative errors |measured - model| / |model|, skipping entries
/// with |model| = 0. Pool these across draws and take the median to score the
/// decoupled model.
std::vector<double> entrywise_relative_errors(std::span<const cplx> measured,
                                              std::span<const cplx> model);

/// Median of a sample (averages the middle pair for even sizes).
double median_of(std::vector<double> values);

}  // namespace iscc
