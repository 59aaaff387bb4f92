#include "iscc/sensing.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace iscc {

namespace {

void check_bound_args(double sigma_z2, double power, double alpha, int M, int N) {
    if (!(sigma_z2 > 0.0)) throw ConfigError("crlb: sigma_z2 must be positive");
    if (!(power > 0.0)) throw ConfigError("crlb: transmit energy must be positive");
    if (!(alpha > 0.0)) throw ConfigError("crlb: alpha must be positive");
    if (N < 2) throw ConfigError("crlb: N must be >= 2");
    if (M < 2) throw ConfigError("crlb: M must be >= 2");
}

}  // namespace

double crlb_distance(double sigma_z2, double c0_mps, double delta_f_hz, double power, double alpha, int M,
                     int N) {
    check_bound_args(sigma_z2, power, alpha, M, N);
    const double Nd = N, Md = M;
    return 3.0 * sigma_z2 * c0_mps * c0_mps /
           (8.0 * kPi * kPi * delta_f_hz * delta_f_hz * power * alpha * alpha * Md * Nd * (Nd * Nd - 1.0));
}

double crlb_velocity(double sigma_z2, double c0_mps, double T_o_s, double f_c_hz, double power, double alpha,
                     int M, int N) {
    check_bound_args(sigma_z2, power, alpha, M, N);
    const double Nd = N, Md = M;
    return 3.0 * sigma_z2 * c0_mps * c0_mps /
           (8.0 * kPi * kPi * T_o_s * T_o_s * f_c_hz * f_c_hz * power * alpha * alpha * Md * Nd *
            (Md * Md - 1.0));
}

SensingParams SensingParams::from_physical(const SystemConfig& cfg, double d_m, double v_mps, double alpha,
                                           double psi, int P) {
    SensingParams p;
    const double tau_s = 2.0 * d_m / cfg.c0_mps;           // round trip
    const double f_d = 2.0 * v_mps * cfg.f_c_hz / cfg.c0_mps;
    p.tau_bar = 2.0 * kPi * cfg.delta_f_hz * tau_s;
    p.v_bar = 2.0 * kPi * cfg.T_o_s * f_d;
    p.alpha = alpha;
    p.psi = psi;
    p.P = P;
    return p;
}

double SensingParams::distance_m(const SystemConfig& cfg) const {
    return cfg.c0_mps * tau_bar / (4.0 * kPi * cfg.delta_f_hz);
}

double SensingParams::velocity_mps(const SystemConfig& cfg) const {
    return cfg.c0_mps * v_bar / (4.0 * kPi * cfg.T_o_s * cfg.f_c_hz);
}

double SensingParams::doppler_hz(const SystemConfig& cfg) const { return v_bar / (2.0 * kPi * cfg.T_o_s); }

bool SensingParams::narrowband_ok(const SystemConfig& cfg) const {
    return std::abs(doppler_hz(cfg)) <= 0.05 * cfg.delta_f_hz;
}

cplx echo_signal_mean(const SensingParams& theta, std::span<const double> amplitudes, int m, int n) {
    const int N = static_cast<int>(amplitudes.size());
    const double phase = m * theta.v_bar - n * (theta.tau_bar + 2.0 * kPi * theta.P / N) + theta.psi;
    return theta.alpha * amplitudes[n] * cplx(std::cos(phase), std::sin(phase));
}

namespace {

using Grad = std::array<cplx, 4>;

FisherMatrix fisher_from_gradients(const std::function<Grad(int, int)>& grad, double sigma_z2, int M,
                                   int N) {
    if (!(sigma_z2 > 0.0)) throw ConfigError("fisher: sigma_z2 must be positive");
    if (M < 1 || N < 1) throw ConfigError("fisher: M and N must be >= 1");
    FisherMatrix F;
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            Grad g = grad(m, n);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    F.full[i][j] += (std::conj(g[i]) * g[j]).real();
        }
    }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) F.full[i][j] /= sigma_z2;

    // Reduced per-symbol blocks: restrict, then average the symbol dimension out.
    const int delay_idx[3] = {0, 2, 3};
    const int doppler_idx[3] = {1, 2, 3};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            F.delay_block[i][j] = F.full[delay_idx[i]][delay_idx[j]] / M;
            F.doppler_block[i][j] = F.full[doppler_idx[i]][doppler_idx[j]] / M;
        }
    }
    return F;
}

}  // namespace

FisherMatrix numerical_fisher(const SignalMeanFn& mean, const SensingParams& theta0, double sigma_z2, int M,
                              int N) {
    auto perturbed = [&](int coord, double delta) {
        SensingParams t = theta0;
        switch (coord) {
            case 0: t.tau_bar += delta; break;
            case 1: t.v_bar += delta; break;
            case 2: t.alpha += delta; break;
            default: t.psi += delta; break;
        }
        return t;
    };
    const double base[4] = {theta0.tau_bar, theta0.v_bar, theta0.alpha, theta0.psi};
    double step[4];
    for (int i = 0; i < 4; ++i) step[i] = 1e-5 * std::max(1.0, std::abs(base[i]));

    auto grad = [&](int m, int n) {
        Grad g;
        for (int i = 0; i < 4; ++i) {
            const cplx hi = mean(perturbed(i, step[i]), m, n);
            const cplx lo = mean(perturbed(i, -step[i]), m, n);
            g[i] = (hi - lo) / (2.0 * step[i]);
        }
        return g;
    };
    return fisher_from_gradients(grad, sigma_z2, M, N);
}

FisherMatrix analytic_fisher(const SensingParams& theta0, std::span<const double> amplitudes,
                             double sigma_z2, int M, int N) {
    if (static_cast<int>(amplitudes.size()) != N) throw ConfigError("fisher: amplitude profile must have N entries");
    auto grad = [&](int m, int n) {
        const double phase = m * theta0.v_bar - n * (theta0.tau_bar + 2.0 * kPi * theta0.P / N) + theta0.psi;
        const cplx unit(std::cos(phase), std::sin(phase));
        const cplx A = theta0.alpha * amplitudes[n] * unit;
        const cplx j(0.0, 1.0);
        Grad g;
        g[0] = -j * static_cast<double>(n) * A;   // d/d tau_bar
        g[1] = j * static_cast<double>(m) * A;    // d/d v_bar
        g[2] = amplitudes[n] * unit;              // d/d alpha (valid at alpha = 0 too)
        g[3] = j * A;                             // d/d psi
        return g;
    };
    return fisher_from_gradients(grad, sigma_z2, M, N);
}

namespace {

// Pivoted 3x3 inverse; throws when the block has no usable rank.
std::array<std::array<double, 3>, 3> invert3(const std::array<std::array<double, 3>, 3>& A) {
    double aug[3][6] = {};
    double scale = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            aug[i][j] = A[i][j];
            scale = std::max(scale, std::abs(A[i][j]));
        }
        aug[i][3 + i] = 1.0;
    }
    if (scale == 0.0) throw RankDeficientError("fisher: reduced block is identically zero");

    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
        if (std::abs(aug[pivot][col]) < 1e-13 * scale)
            throw RankDeficientError("fisher: reduced block is rank deficient (zero or degenerate signal)");
        if (pivot != col)
            for (int j = 0; j < 6; ++j) std::swap(aug[col][j], aug[pivot][j]);
        const double inv_p = 1.0 / aug[col][col];
        for (int j = 0; j < 6; ++j) aug[col][j] *= inv_p;
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = aug[r][col];
            for (int j = 0; j < 6; ++j) aug[r][j] -= f * aug[col][j];
        }
    }
    std::array<std::array<double, 3>, 3> inv{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) inv[i][j] = aug[i][3 + j];
    return inv;
}

}  // namespace

AveragedCrlb averaged_crlb_from_fisher(const FisherMatrix& F, int M, int N) {
    if (M < 2 || N < 2) throw ConfigError("averaged_crlb: need M >= 2 and N >= 2");
    const double avg = static_cast<double>(M) * static_cast<double>(N);
    AveragedCrlb out;
    out.var_tau_bar = invert3(F.delay_block)[0][0] / avg;
    out.var_v_bar = invert3(F.doppler_block)[0][0] / avg;
    if (!(out.var_tau_bar > 0.0) || !(out.var_v_bar > 0.0))
        throw RankDeficientError("averaged_crlb: nonpositive variance bound, information block invalid");
    return out;
}

double distance_variance_from_tau_bar(double var_tau_bar, const SystemConfig& cfg) {
    const double s = cfg.c0_mps / (4.0 * kPi * cfg.delta_f_hz);
    return s * s * var_tau_bar;
}

double velocity_variance_from_v_bar(double var_v_bar, const SystemConfig& cfg) {
    const double s = cfg.c0_mps / (4.0 * kPi * cfg.T_o_s * cfg.f_c_hz);
    return s * s * var_v_bar;
}

void export_crlb_table(const SystemConfig& cfg, const std::vector<double>& powers_mw,
                       const std::string& path) {
    cfg.validate();
    const SensingBudget budget = derive_sensing_budget(cfg);
    std::ofstream out(path);
    if (!out) throw ConfigError("crlb table: cannot write '" + path + "'");
    char buf[64];
    out << "# config " << config_to_json_text(cfg) << "\n";
    out << "# seed " << cfg.seed << "\n";
    out << "device,power_mw,crlb_distance_m2,crlb_velocity_m2s2,rho_prime_mw\n";
    for (int k = 0; k < cfg.K; ++k) {
        for (double p : powers_mw) {
            const double d = crlb_distance(cfg.sigma_z2_mw, cfg.c0_mps, cfg.delta_f_hz, p, cfg.alpha, cfg.M,
                                           cfg.N);
            const double v = crlb_velocity(cfg.sigma_z2_mw, cfg.c0_mps, cfg.T_o_s, cfg.f_c_hz, p, cfg.alpha,
                                           cfg.M, cfg.N);
            out << k << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", p);
            out << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", d);
            out << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", budget.rho_prime[k]);
            out << buf << '\n';
        }
    }
}

}  // namespace iscc
