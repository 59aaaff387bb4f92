#include "iscc/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "iscc/dft.hpp"

namespace iscc {

CGrid draw_data(int K, int N, RngStream& stream) {
    if (K < 1 || N < 1) throw ConfigError("draw_data: need at least one device and subcarrier");
    CGrid data(K, N);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) data(k, n) = stream.cgaussian(1.0);
    return data;
}

OfdmFrame make_frame(const CGrid& coefficients, const CGrid& data, int cp_length) {
    if (coefficients.rows() != data.rows() || coefficients.cols() != data.cols())
        throw ConfigError("make_frame: coefficient/data shape mismatch");
    const int K = data.rows(), N = data.cols();
    if (N < 1) throw ConfigError("make_frame: empty symbol");
    if (cp_length < 0 || cp_length > N)
        throw ConfigError("make_frame: prefix length must lie in [0, N]");

    OfdmFrame f;
    f.data = data;
    f.cp_length = cp_length;
    f.freq_symbols = CGrid(K, N);
    f.time_samples = CGrid(K, N);
    f.cp_extended = CGrid(K, N + cp_length);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) f.freq_symbols(k, n) = coefficients(k, n) * data(k, n);
        const std::vector<cplx> x = idft(f.freq_symbols.row(k));
        for (int s = 0; s < N; ++s) f.time_samples(k, s) = x[static_cast<std::size_t>(s)];
        for (int s = 0; s < cp_length; ++s)
            f.cp_extended(k, s) = x[static_cast<std::size_t>(N - cp_length + s)];
        for (int s = 0; s < N; ++s) f.cp_extended(k, cp_length + s) = x[static_cast<std::size_t>(s)];
    }
    return f;
}

std::vector<cplx> simulate_uplink(const OfdmFrame& frame, const CommChannel& comm, double sigma_w2,
                                  RngStream& stream) {
    const int K = frame.time_samples.rows(), N = frame.time_samples.cols();
    if (comm.K != K || comm.N != N) throw ConfigError("simulate_uplink: channel/frame shape mismatch");
    if (comm.L > frame.cp_length)
        throw ConfigError("simulate_uplink: channel memory exceeds the cyclic prefix");
    if (sigma_w2 < 0.0) throw ConfigError("simulate_uplink: noise power must be nonnegative");

    // Superposed receive window (prefix stripped). Every needed index
    // s = cp_length + t - l with t in [0, N), l < L <= cp_length stays inside
    // the extended sequence.
    std::vector<cplx> window(static_cast<std::size_t>(N), cplx{0.0, 0.0});
    for (int t = 0; t < N; ++t) {
        cplx acc{0.0, 0.0};
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < comm.L; ++l)
                acc += comm.effective_tap(k, l) * frame.cp_extended(k, frame.cp_length + t - l);
        window[static_cast<std::size_t>(t)] = acc;
    }
    if (sigma_w2 > 0.0) {
        for (int t = 0; t < N; ++t) window[static_cast<std::size_t>(t)] += stream.cgaussian(sigma_w2);
    }
    return dft(window);
}

EmpiricalMse empirical_aircomp_mse(const CGrid& complex_tx, std::span<const cplx> W,
                                   const CommChannel& comm, double sigma_w2, int n_trials,
                                   RngStream& stream) {
    const int K = comm.K, N = comm.N;
    if (complex_tx.rows() != K || complex_tx.cols() != N)
        throw ConfigError("empirical_aircomp_mse: design/channel shape mismatch");
    if (W.size() != static_cast<std::size_t>(N))
        throw ConfigError("empirical_aircomp_mse: aggregation size mismatch");
    if (n_trials < 2) throw ConfigError("empirical_aircomp_mse: need at least two trials");

    double sum = 0.0, sum_sq = 0.0;
    for (int trial = 0; trial < n_trials; ++trial) {
        const CGrid data = draw_data(K, N, stream);
        const OfdmFrame frame = make_frame(complex_tx, data, comm.L);
        const std::vector<cplx> Y = simulate_uplink(frame, comm, sigma_w2, stream);
        double err = 0.0;
        for (int n = 0; n < N; ++n) {
            cplx target{0.0, 0.0};
            for (int k = 0; k < K; ++k) target += data(k, n);
            target /= static_cast<double>(K);
            const cplx agg = W[static_cast<std::size_t>(n)] * Y[static_cast<std::size_t>(n)] /
                             static_cast<double>(K);
            err += std::norm(agg - target);
        }
        err /= static_cast<double>(N);
        sum += err;
        sum_sq += err * err;
    }
    EmpiricalMse out;
    out.trials = n_trials;
    out.mean = sum / n_trials;
    const double var = std::max(0.0, (sum_sq - sum * sum / n_trials) / (n_trials - 1));
    out.std_err = std::sqrt(var / n_trials);
    return out;
}

CGrid simulate_echo(const std::vector<OfdmFrame>& frames, const SensingChannels& sens, int device,
                    double doppler_hz, double psi, double T_o_s, double sigma_z2, RngStream& stream) {
    if (frames.empty()) throw ConfigError("simulate_echo: need at least one symbol");
    const int K = frames[0].time_samples.rows(), N = frames[0].time_samples.cols();
    const int cp = frames[0].cp_length;
    if (sens.K != K) throw ConfigError("simulate_echo: channel/frame device count mismatch");
    if (device < 0 || device >= K) throw ConfigError("simulate_echo: device index out of range");
    if (sigma_z2 < 0.0) throw ConfigError("simulate_echo: noise power must be nonnegative");
    const int tau = sens.target_delay[static_cast<std::size_t>(device)];
    if (tau + sens.target_memory - 1 > cp)
        throw ConfigError("simulate_echo: target delay spills past the cyclic prefix");
    if (sens.interference_memory > 0 && sens.interference_memory - 1 > cp)
        throw ConfigError("simulate_echo: interference memory spills past the cyclic prefix");

    const int M = static_cast<int>(frames.size());
    CGrid windows(M, N);
    for (int m = 0; m < M; ++m) {
        const OfdmFrame& f = frames[static_cast<std::size_t>(m)];
        if (f.time_samples.rows() != K || f.time_samples.cols() != N || f.cp_length != cp)
            throw ConfigError("simulate_echo: symbols disagree in shape");
        const cplx rotation =
            std::polar(1.0, 2.0 * kPi * m * T_o_s * doppler_hz + psi);  // target bounce phase
        for (int t = 0; t < N; ++t) {
            const int s = cp + t;
            cplx own{0.0, 0.0};
            for (int l = 0; l < sens.target_memory; ++l)
                own += sens.target_taps(device, l) * f.cp_extended(device, s - tau - l);
            cplx leak{0.0, 0.0};
            for (int i = 0; i < K; ++i) {
                if (i == device) continue;
                for (int j = 0; j < sens.interference_memory; ++j) {
                    const cplx xi = f.cp_extended(i, s - j);
                    leak += sens.reflect_taps[static_cast<std::size_t>(device)](i, j) * rotation * xi;
                    leak += sens.direct_taps[static_cast<std::size_t>(device)](i, j) * xi;
                }
            }
            cplx noise{0.0, 0.0};
            if (sigma_z2 > 0.0) noise = stream.cgaussian(sigma_z2);
            windows(m, t) = rotation * own + leak + noise;
        }
    }
    return windows;
}

MatchedFilterBank make_filter_bank(const CGrid& device_data, int filter_length) {
    const int M = device_data.rows(), N = device_data.cols();
    if (M < 1 || N < 1) throw ConfigError("make_filter_bank: empty data");
    if (filter_length < 1) throw ConfigError("make_filter_bank: filter length must be positive");
    MatchedFilterBank bank;
    bank.length = filter_length;
    bank.filters = CGrid(M, N);
    for (int m = 0; m < M; ++m) {
        const std::vector<cplx> c = idft(device_data.row(m));
        for (int s = 0; s < N; ++s) {
            const int idx = ((filter_length - s) % N + N) % N;
            bank.filters(m, s) = std::conj(c[static_cast<std::size_t>(idx)]);
        }
    }
    return bank;
}

CGrid matched_filter_outputs(const CGrid& echo_windows, const MatchedFilterBank& bank) {
    const int M = echo_windows.rows(), N = echo_windows.cols();
    if (bank.filters.rows() != M || bank.filters.cols() != N)
        throw ConfigError("matched_filter_outputs: bank/window shape mismatch");
    CGrid out(M, N);
    const double scale = std::sqrt(static_cast<double>(N)) / static_cast<double>(bank.length);
    for (int m = 0; m < M; ++m) {
        const std::vector<cplx> compressed = circular_convolve(echo_windows.row(m), bank.filters.row(m));
        const std::vector<cplx> spectrum = dft(compressed);
        for (int n = 0; n < N; ++n) out(m, n) = scale * spectrum[static_cast<std::size_t>(n)];
    }
    return out;
}

std::vector<cplx> matched_filter_and_dft(const CGrid& echo_windows, const MatchedFilterBank& bank) {
    const CGrid per_symbol = matched_filter_outputs(echo_windows, bank);
    const int M = per_symbol.rows(), N = per_symbol.cols();
    std::vector<cplx> avg(static_cast<std::size_t>(N), cplx{0.0, 0.0});
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) avg[static_cast<std::size_t>(n)] += per_symbol(m, n);
    for (auto& v : avg) v /= static_cast<double>(M);
    return avg;
}

CGrid decoupling_model(const SensingParams& theta, std::span<const double> amplitudes, int M, int N) {
    if (M < 1) throw ConfigError("decoupling_model: need at least one symbol");
    if (amplitudes.size() != static_cast<std::size_t>(N))
        throw ConfigError("decoupling_model: amplitude count must match subcarriers");
    CGrid model(M, N);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) model(m, n) = echo_signal_mean(theta, amplitudes, m, n);
    return model;
}

std::vector<double> entrywise_relative_errors(std::span<const cplx> measured,
                                              std::span<const cplx> model) {
    if (measured.size() != model.size())
        throw ConfigError("entrywise_relative_errors: size mismatch");
    std::vector<double> errs;
    errs.reserve(measured.size());
    for (std::size_t i = 0; i < measured.size(); ++i) {
        const double ref = std::abs(model[i]);
        if (ref == 0.0) continue;
        errs.push_back(std::abs(measured[i] - model[i]) / ref);
    }
    return errs;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median_of: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace iscc
