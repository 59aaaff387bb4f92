#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "iscc/aircomp.hpp"
#include "iscc/channel.hpp"
#include "iscc/dft.hpp"
#include "iscc/rng.hpp"
#include "iscc/waveform.hpp"

using namespace iscc;

namespace {
std::vector<cplx> random_vector(int N, RngStream& s) {
    std::vector<cplx> v(N);
    for (auto& x : v) x = s.cgaussian();
    return v;
}
}  // namespace

TEST_CASE("unitary transforms round trip and conserve energy") {
    RngStream s = rng_substream(1, "wave/dft");
    for (const int N : {4, 8, 12, 16}) {  // power-of-two and the direct fallback
        const std::vector<cplx> x = random_vector(N, s);
        const std::vector<cplx> X = dft(x);
        const std::vector<cplx> back = idft(X);
        double px = 0.0, pX = 0.0;
        for (int i = 0; i < N; ++i) {
            CHECK(std::abs(back[i] - x[i]) < 1e-12);
            px += std::norm(x[i]);
            pX += std::norm(X[i]);
        }
        CHECK(px == doctest::Approx(pX).epsilon(1e-12));
    }
    // Unit impulse spreads to the flat 1/sqrt(N) spectrum.
    std::vector<cplx> delta(8, cplx(0.0, 0.0));
    delta[0] = 1.0;
    for (const cplx& v : dft(delta)) CHECK(std::abs(v - cplx(1.0 / std::sqrt(8.0), 0.0)) < 1e-14);
}

TEST_CASE("circular convolution: hand value and spectral identity") {
    const std::vector<cplx> a = {cplx(1, 0), cplx(2, 0)};
    const std::vector<cplx> b = {cplx(3, 0), cplx(4, 0)};
    const std::vector<cplx> c = circular_convolve(a, b);
    CHECK(std::abs(c[0] - cplx(11, 0)) < 1e-14);
    CHECK(std::abs(c[1] - cplx(10, 0)) < 1e-14);

    RngStream s = rng_substream(2, "wave/conv");
    const int N = 8;
    const std::vector<cplx> u = random_vector(N, s);
    const std::vector<cplx> v = random_vector(N, s);
    const std::vector<cplx> Uc = dft(circular_convolve(u, v));
    const std::vector<cplx> U = dft(u), V = dft(v);
    for (int n = 0; n < N; ++n)
        CHECK(std::abs(Uc[n] - std::sqrt(double(N)) * U[n] * V[n]) < 1e-11);
}

TEST_CASE("symbol assembly: coefficients, transform, and prefix") {
    const int K = 2, N = 8, cp = 3;
    RngStream s = rng_substream(3, "wave/frame");
    const CGrid data = draw_data(K, N, s);
    CGrid coeff(K, N);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) coeff(k, n) = cplx(0.2 + 0.1 * k + 0.01 * n, 0.0);
    const OfdmFrame f = make_frame(coeff, data, cp);
    CHECK(f.cp_length == cp);
    REQUIRE(f.cp_extended.cols() == N + cp);
    for (int k = 0; k < K; ++k) {
        // freq = coeff * data, time = unitary inverse transform of freq.
        const std::vector<cplx> t = idft(f.freq_symbols.row(k));
        for (int n = 0; n < N; ++n) {
            CHECK(std::abs(f.freq_symbols(k, n) - coeff(k, n) * data(k, n)) < 1e-14);
            CHECK(std::abs(f.time_samples(k, n) - t[n]) < 1e-12);
            CHECK(std::abs(f.cp_extended(k, cp + n) - f.time_samples(k, n)) < 1e-14);
        }
        // The prefix is the tail copied in front.
        for (int i = 0; i < cp; ++i)
            CHECK(std::abs(f.cp_extended(k, i) - f.time_samples(k, N - cp + i)) < 1e-14);
    }
    CHECK_NOTHROW(make_frame(coeff, data, N));      // full-length prefix is legal
    CHECK_THROWS_AS(make_frame(coeff, data, N + 1), ConfigError);
    CHECK_THROWS_AS(make_frame(coeff, data, -1), ConfigError);
    CGrid bad(K, N + 1);
    CHECK_THROWS_AS(make_frame(coeff, bad, cp), ConfigError);
}

TEST_CASE("data draws are unit variance and label deterministic") {
    RngStream a = rng_substream(9, "wave/data");
    RngStream b = rng_substream(9, "wave/data");
    const CGrid d1 = draw_data(3, 64, a);
    const CGrid d2 = draw_data(3, 64, b);
    CHECK(d1 == d2);
    double p = 0.0;
    for (int k = 0; k < 3; ++k)
        for (int n = 0; n < 64; ++n) p += std::norm(d1(k, n));
    CHECK(p / (3 * 64) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("uplink through a flat channel is the exact coefficient sum") {
    const int K = 3, N = 8, cp = 2;
    RngStream s = rng_substream(4, "wave/uplink");
    const CGrid data = draw_data(K, N, s);
    CGrid coeff(K, N);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) coeff(k, n) = cplx(0.5 + 0.1 * k, 0.0);
    const OfdmFrame f = make_frame(coeff, data, cp);
    const CommChannel flat = comm_channel_from_taps(CGrid(K, 1, cplx(1.0, 0.0)), N, true);
    const std::vector<cplx> Y = simulate_uplink(f, flat, 0.0, s);
    for (int n = 0; n < N; ++n) {
        cplx want{0.0, 0.0};
        for (int k = 0; k < K; ++k) want += f.freq_symbols(k, n);
        CHECK(std::abs(Y[n] - want) < 1e-12);
    }
}

TEST_CASE("uplink through a two-tap channel applies the frequency response") {
    const int N = 8, cp = 3;
    RngStream s = rng_substream(5, "wave/twotap");
    const CGrid data = draw_data(1, N, s);
    CGrid coeff(1, N, cplx(0.8, 0.0));
    const OfdmFrame f = make_frame(coeff, data, cp);
    CGrid taps(1, 2);
    taps(0, 0) = cplx(0.9, 0.2);
    taps(0, 1) = cplx(-0.3, 0.4);
    const CommChannel ch = comm_channel_from_taps(taps, N, true);
    const std::vector<cplx> Y = simulate_uplink(f, ch, 0.0, s);
    for (int n = 0; n < N; ++n)
        CHECK(std::abs(Y[n] - ch.freq_response(0, n) * f.freq_symbols(0, n)) < 1e-10);
}

TEST_CASE("uplink rejects memory longer than the prefix") {
    const int N = 8;
    RngStream s = rng_substream(6, "wave/reject");
    const CGrid data = draw_data(1, N, s);
    const OfdmFrame f = make_frame(CGrid(1, N, cplx(1.0, 0.0)), data, 1);
    const CommChannel ch = comm_channel_from_taps(CGrid(1, 3, cplx(0.5, 0.0)), N, true);
    CHECK_THROWS_AS(simulate_uplink(f, ch, 0.0, s), ConfigError);
}

TEST_CASE("uplink noise has the configured variance") {
    const int N = 8, trials = 200;
    RngStream s = rng_substream(7, "wave/noise");
    const CGrid data = draw_data(1, N, s);
    const OfdmFrame f = make_frame(CGrid(1, N, cplx(0.0, 0.0)), data, 2);
    const CommChannel ch = comm_channel_from_taps(CGrid(1, 1, cplx(1.0, 0.0)), N, true);
    const double s2 = 0.5;
    double p = 0.0;
    for (int t = 0; t < trials; ++t)
        for (const cplx& y : simulate_uplink(f, ch, s2, s)) p += std::norm(y);
    p /= trials * N;
    // |Y|^2 is exponential with mean s2: standard error s2/sqrt(trials*N).
    CHECK(std::abs(p - s2) < 4.0 * s2 / std::sqrt(double(trials * N)));
}

TEST_CASE("empirical aggregation error: exact zero and analytic agreement") {
    RngStream s = rng_substream(8, "wave/emp");
    SUBCASE("ideal single device is error free") {
        const int N = 4;
        const CommChannel flat = comm_channel_from_taps(CGrid(1, 1, cplx(1.0, 0.0)), N, true);
        const CGrid tx(1, N, cplx(1.0, 0.0));
        const std::vector<cplx> W(N, cplx(1.0, 0.0));
        const EmpiricalMse e = empirical_aircomp_mse(tx, W, flat, 0.0, 50, s);
        CHECK(e.mean == doctest::Approx(0.0).epsilon(1e-20));
        CHECK(e.trials == 50);
    }
    SUBCASE("matches the analytic value within sampling error") {
        const int K = 2, N = 8;
        CGrid taps(K, 2);
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < 2; ++l) taps(k, l) = s.cgaussian();
        const CommChannel ch = comm_channel_from_taps(taps, N, true);
        CGrid tx(K, N);
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n) tx(k, n) = 0.7 * s.cgaussian();
        const double s2 = 0.05;
        const std::vector<cplx> W = optimal_aggregation(tx, ch.freq_response, s2);
        const MseBreakdown ana = mse_objective(tx, ch.freq_response, W, s2);
        const EmpiricalMse e = empirical_aircomp_mse(tx, W, ch, s2, 4000, s);
        CHECK(std::abs(e.mean - ana.mse) < 4.0 * e.std_err);
    }
}

TEST_CASE("pulse compression recovers the per-symbol echo model exactly") {
    // Noiseless, zero leakage, single-tap target: symbol m's output on
    // subcarrier n is |data|^2 times the model mean
    //   alpha b_n exp(j(m v_bar - n(tau_bar + 2 pi P/N) + psi)).
    SystemConfig cfg = SystemConfig::defaults();
    cfg.K = 1;
    cfg.N = 8;
    cfg.N_c = 4;
    cfg.M = 3;
    cfg.alpha = 0.6;
    cfg.interference_power = 0.0;
    cfg.comm_taps = 4;
    cfg.interference_taps = 2;
    cfg.eta_m2.assign(1, cfg.eta_m2[0]);
    cfg.xi_m2s2.assign(1, cfg.xi_m2s2[0]);
    cfg.roundtrip_delay = {2};
    const int N = cfg.N, M = cfg.M, tau = 2;
    const double psi = 0.9, f_d = 5000.0;

    RngStream chan_stream = rng_substream(11, "wave/echo-chan");
    const SensingChannels sens = draw_sensing_channels(cfg, chan_stream, true, 1);

    const double amp = std::sqrt(2.0 / N);
    CGrid coeff(1, N, cplx(amp, 0.0));
    std::vector<double> amps(N, amp);
    RngStream data_stream = rng_substream(12, "wave/echo-data");
    std::vector<OfdmFrame> frames;
    CGrid device_data(M, N);
    for (int m = 0; m < M; ++m) {
        const CGrid data = draw_data(1, N, data_stream);
        frames.push_back(make_frame(coeff, data, cfg.N_c));
        for (int n = 0; n < N; ++n) device_data(m, n) = data(0, n);
    }

    RngStream noise_stream = rng_substream(13, "wave/echo-noise");
    const CGrid windows = simulate_echo(frames, sens, 0, f_d, psi, cfg.T_o_s, 0.0, noise_stream);
    const MatchedFilterBank bank = make_filter_bank(device_data, N);
    const CGrid out = matched_filter_outputs(windows, bank);

    SensingParams theta;
    theta.tau_bar = 2.0 * kPi * tau / N;
    theta.v_bar = 2.0 * kPi * cfg.T_o_s * f_d;
    theta.alpha = cfg.alpha;
    theta.psi = psi;
    theta.P = N;
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const cplx expect = std::norm(device_data(m, n)) * echo_signal_mean(theta, amps, m, n);
            CHECK(std::abs(out(m, n) - expect) < 1e-10);
        }

    // The burst average is exactly the row mean of the per-symbol outputs.
    const std::vector<cplx> avg = matched_filter_and_dft(windows, bank);
    for (int n = 0; n < N; ++n) {
        cplx want{0.0, 0.0};
        for (int m = 0; m < M; ++m) want += out(m, n);
        want /= double(M);
        CHECK(std::abs(avg[n] - want) < 1e-13);
    }

    // With identical data on every symbol the symbol-to-symbol ratio is the
    // pure Doppler rotation.
    std::vector<OfdmFrame> repeated;
    CGrid repeated_data(M, N);
    const CGrid fixed = draw_data(1, N, data_stream);
    for (int m = 0; m < M; ++m) {
        repeated.push_back(make_frame(coeff, fixed, cfg.N_c));
        for (int n = 0; n < N; ++n) repeated_data(m, n) = fixed(0, n);
    }
    const CGrid windows2 = simulate_echo(repeated, sens, 0, f_d, psi, cfg.T_o_s, 0.0, noise_stream);
    const CGrid out2 = matched_filter_outputs(windows2, make_filter_bank(repeated_data, N));
    const cplx rot = std::polar(1.0, theta.v_bar);
    for (int m = 0; m + 1 < M; ++m)
        for (int n = 0; n < N; ++n)
            if (std::abs(out2(m, n)) > 1e-6) CHECK(std::abs(out2(m + 1, n) / out2(m, n) - rot) < 1e-10);
}

TEST_CASE("echo simulation validates its geometry") {
    SystemConfig cfg = SystemConfig::defaults();
    cfg.K = 1;
    cfg.N = 8;
    cfg.N_c = 4;
    cfg.comm_taps = 2;
    cfg.interference_taps = 2;
    cfg.eta_m2.assign(1, 1.0);
    cfg.xi_m2s2.assign(1, 1.0);
    cfg.roundtrip_delay = {2};
    RngStream s = rng_substream(14, "wave/echo-reject");
    const SensingChannels sens = draw_sensing_channels(cfg, s, true, 1);
    const CGrid data = draw_data(1, 8, s);
    std::vector<OfdmFrame> frames = {make_frame(CGrid(1, 8, cplx(1.0, 0.0)), data, 1)};
    // Frame prefix (1) is shorter than the round-trip delay (2).
    CHECK_THROWS_AS(simulate_echo(frames, sens, 0, 0.0, 0.0, 8e-6, 0.0, s), ConfigError);
    std::vector<OfdmFrame> ok = {make_frame(CGrid(1, 8, cplx(1.0, 0.0)), data, 2)};
    CHECK_THROWS_AS(simulate_echo(ok, sens, 2, 0.0, 0.0, 8e-6, 0.0, s), ConfigError);
    CHECK_THROWS_AS(simulate_echo(ok, sens, 0, 0.0, 0.0, 8e-6, -1.0, s), ConfigError);
    CHECK_NOTHROW(simulate_echo(ok, sens, 0, 0.0, 0.0, 8e-6, 0.0, s));
}

TEST_CASE("echo noise floor has the configured variance") {
    SystemConfig cfg = SystemConfig::defaults();
    cfg.K = 1;
    cfg.N = 8;
    cfg.N_c = 3;
    cfg.comm_taps = 2;
    cfg.interference_taps = 2;
    cfg.eta_m2.assign(1, 1.0);
    cfg.xi_m2s2.assign(1, 1.0);
    cfg.roundtrip_delay = {2};
    RngStream s = rng_substream(15, "wave/echo-noisefloor");
    const SensingChannels sens = draw_sensing_channels(cfg, s, true, 1);
    const CGrid data = draw_data(1, 8, s);
    const double s2 = 0.3;
    double p = 0.0;
    const int M = 100;
    // Zero transmit coefficients: nothing comes back, the windows are noise.
    std::vector<OfdmFrame> frames(M, make_frame(CGrid(1, 8, cplx(0.0, 0.0)), data, 3));
    const CGrid w = simulate_echo(frames, sens, 0, 0.0, 0.0, 8e-6, s2, s);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < 8; ++n) p += std::norm(w(m, n));
    p /= M * 8;
    CHECK(std::abs(p - s2) < 4.0 * s2 / std::sqrt(double(M * 8)));
}

TEST_CASE("relative errors and medians") {
    const std::vector<cplx> model = {cplx(2, 0), cplx(0, 0), cplx(0, 1)};
    const std::vector<cplx> meas = {cplx(2.2, 0), cplx(5, 5), cplx(0, 0.5)};
    const std::vector<double> errs = entrywise_relative_errors(meas, model);
    REQUIRE(errs.size() == 2);  // the zero-model entry is skipped
    CHECK(errs[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(errs[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(median_of({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
    CHECK(median_of({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
    CHECK_THROWS_AS(median_of({}), ConfigError);
}
