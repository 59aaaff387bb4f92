#include "iscc/aircomp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace iscc {

namespace {

void check_shapes(int bk, int bn, int hk, int hn, std::size_t wn, const char* where) {
    if (bk != hk || bn != hn || wn != static_cast<std::size_t>(hn)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%s: shape mismatch (design %dx%d, channel %dx%d, aggregation %zu)", where, bk,
                      bn, hk, hn, wn);
        throw ConfigError(buf);
    }
}

}  // namespace

RGrid channel_gains(const CGrid& H) {
    RGrid g(H.rows(), H.cols());
    for (std::size_t i = 0; i < H.size(); ++i) g.data()[i] = std::abs(H.data()[i]);
    return g;
}

CGrid align_phase(const RGrid& amplitudes, const CGrid& H, std::span<const cplx> W) {
    check_shapes(amplitudes.rows(), amplitudes.cols(), H.rows(), H.cols(), W.size(), "align_phase");
    CGrid B(H.rows(), H.cols());
    for (int k = 0; k < H.rows(); ++k) {
        for (int n = 0; n < H.cols(); ++n) {
            const double amp = amplitudes(k, n);
            if (amp < 0.0) throw ConfigError("align_phase: amplitudes must be nonnegative");
            if (amp == 0.0) {
                B(k, n) = 0.0;
                continue;
            }
            const cplx through = W[n] * H(k, n);
            const double mag = std::abs(through);
            if (mag == 0.0) {
                char buf[120];
                std::snprintf(buf, sizeof(buf),
                              "align_phase: subcarrier %d of device %d has zero gain but positive "
                              "amplitude",
                              n, k);
                throw DeadSubcarrierError(buf);
            }
            B(k, n) = amp * std::conj(through) / mag;
        }
    }
    return B;
}

MseBreakdown mse_objective(const CGrid& B, const CGrid& H, std::span<const cplx> W, double sigma_w2) {
    check_shapes(B.rows(), B.cols(), H.rows(), H.cols(), W.size(), "mse_objective");
    if (sigma_w2 < 0.0) throw ConfigError("mse_objective: noise power must be nonnegative");
    MseBreakdown out;
    const int K = B.rows(), N = B.cols();
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            const cplx err = W[n] * H(k, n) * B(k, n) - 1.0;
            out.misalignment += std::norm(err);
        }
        out.noise += sigma_w2 * std::norm(W[n]);
    }
    out.mse_bar = out.misalignment + out.noise;
    out.mse = out.mse_bar / (static_cast<double>(N) * static_cast<double>(K) * static_cast<double>(K));
    return out;
}

std::vector<cplx> optimal_aggregation(const CGrid& B, const CGrid& H, double sigma_w2) {
    if (B.rows() != H.rows() || B.cols() != H.cols())
        throw ConfigError("optimal_aggregation: design/channel shape mismatch");
    if (sigma_w2 < 0.0) throw ConfigError("optimal_aggregation: noise power must be nonnegative");
    const int K = B.rows(), N = B.cols();
    std::vector<cplx> W(static_cast<std::size_t>(N), cplx{0.0, 0.0});
    for (int n = 0; n < N; ++n) {
        cplx num{0.0, 0.0};
        double den = sigma_w2;
        for (int k = 0; k < K; ++k) {
            num += std::conj(H(k, n) * B(k, n));
            den += std::norm(H(k, n) * B(k, n));
        }
        W[n] = (den > 0.0) ? num / den : cplx{0.0, 0.0};
    }
    return W;
}

std::vector<double> aligned_aggregation(const RGrid& amplitudes, const RGrid& gains, double sigma_w2) {
    if (amplitudes.rows() != gains.rows() || amplitudes.cols() != gains.cols())
        throw ConfigError("aligned_aggregation: shape mismatch");
    const int K = gains.rows(), N = gains.cols();
    std::vector<double> w(static_cast<std::size_t>(N), 0.0);
    for (int n = 0; n < N; ++n) {
        double num = 0.0, den = sigma_w2;
        for (int k = 0; k < K; ++k) {
            const double gb = gains(k, n) * amplitudes(k, n);
            num += gb;
            den += gb * gb;
        }
        w[n] = (den > 0.0) ? num / den : 0.0;
    }
    return w;
}

MseBreakdown aligned_mse(const RGrid& amplitudes, const RGrid& gains, std::span<const double> w,
                         double sigma_w2) {
    if (amplitudes.rows() != gains.rows() || amplitudes.cols() != gains.cols() ||
        w.size() != static_cast<std::size_t>(gains.cols()))
        throw ConfigError("aligned_mse: shape mismatch");
    MseBreakdown out;
    const int K = gains.rows(), N = gains.cols();
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            const double err = w[n] * gains(k, n) * amplitudes(k, n) - 1.0;
            out.misalignment += err * err;
        }
        out.noise += sigma_w2 * w[n] * w[n];
    }
    out.mse_bar = out.misalignment + out.noise;
    out.mse = out.mse_bar / (static_cast<double>(N) * static_cast<double>(K) * static_cast<double>(K));
    return out;
}

RidgeAllocation capped_ridge_allocation(std::span<const double> a, double power_cap) {
    if (power_cap <= 0.0) throw ConfigError("capped_ridge_allocation: power cap must be positive");
    for (double an : a)
        if (!(an >= 0.0)) throw ConfigError("capped_ridge_allocation: gains must be nonnegative");
    const std::size_t N = a.size();
    RidgeAllocation out;
    out.amplitudes.assign(N, 0.0);

    auto power_at = [&](double mu) {
        double s = 0.0;
        for (double an : a) {
            if (an == 0.0) continue;
            const double b = an / (an * an + mu);
            s += b * b;
        }
        return s;
    };

    if (power_at(0.0) <= power_cap) {
        // Interior: b = 1/a wherever the gain is nonzero.
        for (std::size_t n = 0; n < N; ++n) out.amplitudes[n] = (a[n] > 0.0) ? 1.0 / a[n] : 0.0;
        out.multiplier = 0.0;
        return out;
    }
    double lo = 0.0, hi = 1.0;
    while (power_at(hi) > power_cap) {
        hi *= 2.0;
        if (hi > 1e30) throw ConfigError("capped_ridge_allocation: bisection failed to bracket");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (power_at(mid) > power_cap)
            lo = mid;
        else
            hi = mid;
    }
    out.multiplier = 0.5 * (lo + hi);
    for (std::size_t n = 0; n < N; ++n)
        out.amplitudes[n] = (a[n] > 0.0) ? a[n] / (a[n] * a[n] + out.multiplier) : 0.0;
    return out;
}

AsymptoticCheck asymptotic_mse_check(const CGrid& H, double sigma_w2,
                                     std::span<const double> power_grid) {
    AsymptoticCheck out;
    out.power_grid.assign(power_grid.begin(), power_grid.end());
    const RGrid gains = channel_gains(H);
    const int K = H.rows(), N = H.cols();
    for (double cap : power_grid) {
        if (cap <= 0.0) throw ConfigError("asymptotic_mse_check: power grid must be positive");
        RGrid amps(K, N, std::sqrt(cap / static_cast<double>(N)));
        std::vector<double> w;
        std::vector<double> ak(static_cast<std::size_t>(N));
        double prev = std::numeric_limits<double>::infinity();
        for (int round = 0; round < 300; ++round) {
            w = aligned_aggregation(amps, gains, sigma_w2);
            for (int k = 0; k < K; ++k) {
                for (int n = 0; n < N; ++n) ak[static_cast<std::size_t>(n)] = w[n] * gains(k, n);
                const RidgeAllocation ra = capped_ridge_allocation(ak, cap);
                for (int n = 0; n < N; ++n) amps(k, n) = ra.amplitudes[static_cast<std::size_t>(n)];
            }
            const double cur = aligned_mse(amps, gains, w, sigma_w2).mse_bar;
            if (prev - cur < 1e-12 * (1.0 + cur)) break;
            prev = cur;
        }
        w = aligned_aggregation(amps, gains, sigma_w2);
        out.mse_bar.push_back(aligned_mse(amps, gains, w, sigma_w2).mse_bar);
        double wmax = 0.0;
        for (double wn : w) wmax = std::max(wmax, std::abs(wn));
        out.max_w.push_back(wmax);
    }
    out.mse_decreasing = true;
    out.w_shrinking = true;
    for (std::size_t i = 1; i < out.mse_bar.size(); ++i) {
        if (out.mse_bar[i] >= out.mse_bar[i - 1]) out.mse_decreasing = false;
        if (out.max_w[i] >= out.max_w[i - 1]) out.w_shrinking = false;
    }
    return out;
}

}  // namespace iscc
