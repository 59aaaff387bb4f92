#pragma once

#include <string>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/rng.hpp"
#include "iscc/types.hpp"

namespace iscc {

/// Frequency-selective uplink channel between the devices and the server.
///
/// Stored taps are the unit-variance draws; the frequency response applies the
/// 1/sqrt(L) normalization (when enabled) so the average subcarrier gain is
/// one:  H_{k,n} = (1/sqrt(L)) sum_l taps(k,l) e^{-j 2 pi l n / N}.
/// Time-domain propagation must use effective_tap(), which carries the same
/// normalization, so the frequency and waveform views agree exactly.
struct CommChannel {
    int K = 0;
    int N = 0;
    int L = 0;             // channel memory (tap count per device)
    bool normalized = true;
    CGrid taps;            // K x L
    CGrid freq_response;   // K x N

    cplx effective_tap(int k, int l) const;
};

enum class PowerDelayProfile { Uniform, Exponential };

/// Draw i.i.d. circular-Gaussian taps for every device and build the response.
/// The exponential profile decays tap variance with lag (scale `exp_decay`
/// lags) while keeping the average subcarrier gain at one.
CommChannel draw_comm_channel(const SystemConfig& cfg, RngStream& stream,
                              PowerDelayProfile pdp = PowerDelayProfile::Uniform,
                              double exp_decay = 3.0);

/// Build a channel from given taps (test hook; computes the response).
CommChannel comm_channel_from_taps(const CGrid& taps, int N, bool normalize);

/// Round-trip target attenuation  alpha = sqrt(c0^2 rcs / ((4 pi)^3 d^4 f_c^2)).
double attenuation_constant(double d_m, double rcs_m2, double f_c_hz, double c0_mps);

/// Echo-path channels seen by each device's radar receiver: its own target
/// reflection plus, per other device, a reflected and a direct leakage path.
struct SensingChannels {
    int K = 0;
    bool assumption1 = true;
    double alpha = 1.0;
    int target_memory = 1;             // taps per device target
    std::vector<int> target_delay;     // round-trip delay per device, samples
    CGrid target_taps;                 // K x target_memory
    int interference_memory = 0;
    // Per receiver k: K x interference_memory tap grids, row i holding the
    // paths from transmitter i (row k is zero, the self paths live above).
    std::vector<CGrid> reflect_taps;
    std::vector<CGrid> direct_taps;
};

/// Draw echo-path channels. In assumption-1 mode every target collapses to a
/// single real gain alpha at its round-trip delay; otherwise `target_memory`
/// circular-Gaussian taps with total expected power alpha^2 are drawn.
/// Interference families carry total expected power cfg.interference_power
/// per (receiver, transmitter) pair and family. Delays must stay inside the
/// cyclic prefix (tau + memory - 1 <= N_c), otherwise ConfigError.
SensingChannels draw_sensing_channels(const SystemConfig& cfg, RngStream& stream, bool assumption1 = true,
                                      int target_memory = 1);

/// Plain-text export: '#' metadata lines, then one row per device holding the
/// N frequency-response values as "re im" pairs at 17 significant digits, so
/// a replayed experiment sees bit-identical responses.
void save_comm_channel(const CommChannel& ch, const std::string& path);
CommChannel load_comm_channel(const std::string& path);

}  // namespace iscc
