#include "iscc/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iscc/dft.hpp"

namespace iscc {

namespace {

CGrid response_from_taps(const CGrid& taps, int N, bool normalize) {
    const int K = taps.rows(), L = taps.cols();
    if (L > N) throw ConfigError("channel: memory exceeds subcarrier count");
    CGrid H(K, N);
    const double scale = normalize ? 1.0 / std::sqrt(static_cast<double>(L)) : 1.0;
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            cplx acc{};
            for (int l = 0; l < L; ++l) {
                double ang = -2.0 * kPi * static_cast<double>(l) * static_cast<double>(n) / N;
                acc += taps(k, l) * cplx(std::cos(ang), std::sin(ang));
            }
            H(k, n) = scale * acc;
        }
    }
    return H;
}

}  // namespace

cplx CommChannel::effective_tap(int k, int l) const {
    const double scale = normalized ? 1.0 / std::sqrt(static_cast<double>(L)) : 1.0;
    return taps(k, l) * scale;
}

CommChannel draw_comm_channel(const SystemConfig& cfg, RngStream& stream, PowerDelayProfile pdp,
                              double exp_decay) {
    cfg.validate();
    const int K = cfg.K, N = cfg.N, L = cfg.comm_taps;

    // Per-lag variances average to one so the mean subcarrier gain stays one.
    std::vector<double> lag_var(L, 1.0);
    if (pdp == PowerDelayProfile::Exponential) {
        if (exp_decay <= 0.0) throw ConfigError("channel: exponential decay scale must be positive");
        double sum = 0.0;
        for (int l = 0; l < L; ++l) {
            lag_var[l] = std::exp(-static_cast<double>(l) / exp_decay);
            sum += lag_var[l];
        }
        for (int l = 0; l < L; ++l) lag_var[l] *= static_cast<double>(L) / sum;
    }

    CommChannel ch;
    ch.K = K;
    ch.N = N;
    ch.L = L;
    ch.normalized = cfg.normalize_response;
    ch.taps = CGrid(K, L);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) ch.taps(k, l) = stream.cgaussian(lag_var[l]);
    ch.freq_response = response_from_taps(ch.taps, N, ch.normalized);
    return ch;
}

CommChannel comm_channel_from_taps(const CGrid& taps, int N, bool normalize) {
    CommChannel ch;
    ch.K = taps.rows();
    ch.N = N;
    ch.L = taps.cols();
    ch.normalized = normalize;
    ch.taps = taps;
    ch.freq_response = response_from_taps(taps, N, normalize);
    return ch;
}

double attenuation_constant(double d_m, double rcs_m2, double f_c_hz, double c0_mps) {
    if (!(d_m > 0.0) || !(rcs_m2 > 0.0) || !(f_c_hz > 0.0) || !(c0_mps > 0.0))
        throw ConfigError("attenuation_constant: all arguments must be positive");
    const double four_pi_cubed = std::pow(4.0 * kPi, 3);
    return std::sqrt(c0_mps * c0_mps * rcs_m2 / (four_pi_cubed * std::pow(d_m, 4) * f_c_hz * f_c_hz));
}

SensingChannels draw_sensing_channels(const SystemConfig& cfg, RngStream& stream, bool assumption1,
                                      int target_memory) {
    cfg.validate();
    if (target_memory < 1) throw ConfigError("sensing channel: target memory must be >= 1");
    if (assumption1) target_memory = 1;  // delays and gains collapse to one effective path

    SensingChannels sc;
    sc.K = cfg.K;
    sc.assumption1 = assumption1;
    sc.alpha = cfg.alpha;
    sc.target_memory = target_memory;
    sc.target_delay = cfg.roundtrip_delay;
    for (int k = 0; k < cfg.K; ++k) {
        if (sc.target_delay[k] + target_memory - 1 > cfg.N_c)
            throw ConfigError("sensing channel: target delay spread escapes the cyclic prefix");
    }

    sc.target_taps = CGrid(cfg.K, target_memory);
    for (int k = 0; k < cfg.K; ++k) {
        if (assumption1) {
            sc.target_taps(k, 0) = cplx(cfg.alpha, 0.0);
        } else {
            const double per_tap = cfg.alpha * cfg.alpha / target_memory;
            for (int l = 0; l < target_memory; ++l) sc.target_taps(k, l) = stream.cgaussian(per_tap);
        }
    }

    sc.interference_memory = cfg.interference_taps;
    const double per_tap_int = cfg.interference_power / cfg.interference_taps;
    sc.reflect_taps.assign(cfg.K, CGrid(cfg.K, cfg.interference_taps));
    sc.direct_taps.assign(cfg.K, CGrid(cfg.K, cfg.interference_taps));
    for (int k = 0; k < cfg.K; ++k) {
        for (int i = 0; i < cfg.K; ++i) {
            for (int l = 0; l < cfg.interference_taps; ++l) {
                if (i == k || cfg.interference_power == 0.0) {
                    sc.reflect_taps[k](i, l) = cplx{};
                    sc.direct_taps[k](i, l) = cplx{};
                } else {
                    sc.reflect_taps[k](i, l) = stream.cgaussian(per_tap_int);
                    sc.direct_taps[k](i, l) = stream.cgaussian(per_tap_int);
                }
            }
        }
    }
    return sc;
}

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_comm_channel(const CommChannel& ch, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("channel: cannot write '" + path + "'");
    out << "# comm channel frequency response, one device per row, 're im' pairs per subcarrier\n";
    out << "# K=" << ch.K << " N=" << ch.N << " L=" << ch.L << " normalized=" << (ch.normalized ? 1 : 0)
        << "\n";
    for (int k = 0; k < ch.K; ++k) {
        for (int n = 0; n < ch.N; ++n) {
            if (n) out << ' ';
            out << g17(ch.freq_response(k, n).real()) << ' ' << g17(ch.freq_response(k, n).imag());
        }
        out << '\n';
    }
}

CommChannel load_comm_channel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("channel: cannot open '" + path + "'");

    int K = -1, N = -1, L = -1, normalized = 1;
    std::vector<std::vector<cplx>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::sscanf(line.c_str(), "# K=%d N=%d L=%d normalized=%d", &K, &N, &L, &normalized);
            continue;
        }
        std::istringstream ss(line);
        std::vector<cplx> row;
        double re, im;
        while (ss >> re >> im) row.emplace_back(re, im);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (K < 0 || N < 0 || L < 0) throw ConfigError("channel: file lacks the K/N/L metadata line");
    if (static_cast<int>(rows.size()) != K) throw ConfigError("channel: device row count mismatch");

    CommChannel ch;
    ch.K = K;
    ch.N = N;
    ch.L = L;
    ch.normalized = normalized != 0;
    ch.freq_response = CGrid(K, N);
    for (int k = 0; k < K; ++k) {
        if (static_cast<int>(rows[k].size()) != N) throw ConfigError("channel: subcarrier count mismatch");
        for (int n = 0; n < N; ++n) ch.freq_response(k, n) = rows[k][n];
    }

    // Taps are recovered from the response (exact up to rounding: the response
    // is a zero-padded transform of L <= N taps, so the inverse restricted to
    // the first L lags reproduces them).
    ch.taps = CGrid(K, L);
    const double scale = ch.normalized ? std::sqrt(static_cast<double>(L)) : 1.0;
    for (int k = 0; k < K; ++k) {
        auto g = idft(ch.freq_response.row(k));  // g_s = H-sum / sqrt(N)
        for (int l = 0; l < L; ++l) ch.taps(k, l) = g[l] * scale / std::sqrt(static_cast<double>(N));
    }
    return ch;
}

}  // namespace iscc
