#include "iscc/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace iscc {

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double sum_sq(std::span<const double> x) { return dot(x, x); }

double fit_objective(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        const double e = a[n] * b[n] - 1.0;
        s += e * e;
    }
    return s;
}

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

std::vector<cplx> solve_p11(const CGrid& B, const CGrid& H, double sigma_w2) {
    return optimal_aggregation(B, H, sigma_w2);
}

std::vector<double> solve_p12_sca(std::span<const double> a, double power_cap, double floor,
                                  std::span<const double> reference) {
    const std::size_t N = a.size();
    if (reference.size() != N) throw ConfigError("solve_p12_sca: gain/reference size mismatch");
    if (power_cap <= 0.0) throw ConfigError("solve_p12_sca: power cap must be positive");
    if (floor < 0.0) throw ConfigError("solve_p12_sca: power floor must be nonnegative");
    for (std::size_t n = 0; n < N; ++n) {
        if (!(a[n] >= 0.0) || !std::isfinite(a[n]))
            throw ConfigError("solve_p12_sca: gains must be finite and nonnegative");
        if (!(reference[n] >= 0.0) || !std::isfinite(reference[n]))
            throw ConfigError("solve_p12_sca: reference must be finite and nonnegative");
    }

    const double s_ref = sum_sq(reference);
    const double rhs = floor + s_ref;  // tangent-plane requirement 2<ref, b> >= rhs

    auto tangent = [&](std::span<const double> b) { return 2.0 * dot(reference, b); };

    std::vector<std::vector<double>> candidates;
    candidates.emplace_back(reference.begin(), reference.end());

    // Cases with the floor slack: plain inversion, shrunk onto the cap if needed.
    candidates.push_back(capped_ridge_allocation(a, power_cap).amplitudes);

    bool zero_gain_mass = false;  // some subcarrier contributes to the floor but not the fit
    for (std::size_t n = 0; n < N; ++n)
        if (a[n] == 0.0 && reference[n] > 0.0) zero_gain_mass = true;

    if (!zero_gain_mass) {
        // All floor-relevant subcarriers have positive gain; enumerate the
        // floor-active stationary families. Subcarriers with a_n = 0 (and
        // necessarily reference 0) stay at zero throughout.
        double q1_0 = 0.0, q2_0 = 0.0;  // sum ref/a, sum ref^2/a^2
        for (std::size_t n = 0; n < N; ++n) {
            if (a[n] == 0.0) continue;
            q1_0 += reference[n] / a[n];
            q2_0 += (reference[n] / a[n]) * (reference[n] / a[n]);
        }
        if (q2_0 > 0.0) {
            // Floor active, cap slack: b_n = 1/a_n + nu * ref_n / a_n^2.
            const double nu0 = (rhs - 2.0 * q1_0) / (2.0 * q2_0);
            if (nu0 > 0.0) {
                std::vector<double> b(N, 0.0);
                for (std::size_t n = 0; n < N; ++n)
                    if (a[n] > 0.0) b[n] = 1.0 / a[n] + nu0 * reference[n] / (a[n] * a[n]);
                candidates.push_back(std::move(b));
            }

            // Both active: b_n = (a_n + nu ref_n)/(a_n^2 + mu); the floor
            // equality fixes nu for each mu, the cap equality fixes mu by
            // bisection.
            auto nu_of = [&](double mu) {
                double q1 = 0.0, q2 = 0.0;
                for (std::size_t n = 0; n < N; ++n) {
                    if (a[n] == 0.0) continue;
                    const double d = a[n] * a[n] + mu;
                    q1 += reference[n] * a[n] / d;
                    q2 += reference[n] * reference[n] / d;
                }
                return (rhs - 2.0 * q1) / (2.0 * q2);
            };
            auto build = [&](double mu) {
                const double nu = nu_of(mu);
                std::vector<double> b(N, 0.0);
                for (std::size_t n = 0; n < N; ++n)
                    if (a[n] > 0.0) b[n] = (a[n] + nu * reference[n]) / (a[n] * a[n] + mu);
                return b;
            };
            auto power_of = [&](double mu) { return sum_sq(build(mu)); };

            if (power_of(0.0) > power_cap) {
                double lo = 0.0, hi = 1.0;
                bool bracketed = true;
                while (power_of(hi) > power_cap) {
                    hi *= 2.0;
                    if (hi > 1e30) {
                        bracketed = false;
                        break;
                    }
                }
                if (bracketed) {
                    for (int it = 0; it < 200; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if (power_of(mid) > power_cap)
                            lo = mid;
                        else
                            hi = mid;
                    }
                    const double mu_star = 0.5 * (lo + hi);
                    if (nu_of(mu_star) >= 0.0) candidates.push_back(build(mu_star));
                }
            }
        }
    } else {
        // Some subcarriers carry reference mass with zero gain: meeting the
        // floor there is free in the fit, so invert where possible and put the
        // cheapest extra mass (along the reference) on the zero-gain set.
        std::vector<double> b(N, 0.0);
        double covered = 0.0, dead_ref_sq = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            if (a[n] > 0.0) {
                b[n] = 1.0 / a[n];
                covered += 2.0 * reference[n] * b[n];
            } else {
                dead_ref_sq += reference[n] * reference[n];
            }
        }
        const double need = rhs - covered;
        if (need > 0.0 && dead_ref_sq > 0.0) {
            const double t = need / (2.0 * dead_ref_sq);
            for (std::size_t n = 0; n < N; ++n)
                if (a[n] == 0.0) b[n] = t * reference[n];
        }
        candidates.push_back(std::move(b));
    }

    const double cap_tol = power_cap * 1e-9;
    const double floor_tol = std::max(1.0, std::abs(rhs)) * 1e-9;
    const std::vector<double>* best = nullptr;
    double best_obj = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (sum_sq(c) > power_cap + cap_tol) continue;
        if (tangent(c) < rhs - floor_tol) continue;
        const double obj = fit_objective(a, c);
        if (obj < best_obj) {
            best_obj = obj;
            best = &c;
        }
    }
    if (!best) {
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "solve_p12_sca: no candidate satisfies cap %.6g and linearized floor %.6g "
                      "(reference power %.6g)",
                      power_cap, floor, s_ref);
        throw ScaStepError(buf);
    }
    return *best;
}

AoResult run_ao_phase(const RGrid& gains, const SensingBudget& budget, double power_cap,
                      double sigma_w2, const SolverOptions& opts, const RGrid* init) {
    const int K = gains.rows(), N = gains.cols();
    if (static_cast<int>(budget.rho_prime.size()) != K)
        throw ConfigError("run_ao_phase: budget size does not match device count");
    if (power_cap <= 0.0) throw ConfigError("run_ao_phase: power cap must be positive");
    for (int k = 0; k < K; ++k) {
        if (budget.rho_prime[k] > power_cap) {
            char buf[200];
            std::snprintf(buf, sizeof(buf),
                          "run_ao_phase: device %d needs %.6g mW for its accuracy floor but the "
                          "cap is %.6g mW",
                          k, budget.rho_prime[k], power_cap);
            throw InfeasibleBudgetError(buf, k);
        }
    }

    AoResult out;
    if (init) {
        if (init->rows() != K || init->cols() != N)
            throw ConfigError("run_ao_phase: initial amplitudes have the wrong shape");
        out.amplitudes = *init;
    } else {
        out.amplitudes = RGrid(K, N);
        for (int k = 0; k < K; ++k) {
            const double b0 = std::sqrt(budget.rho_prime[k] / static_cast<double>(N));
            for (int n = 0; n < N; ++n) out.amplitudes(k, n) = b0;
        }
    }

    std::vector<double> ak(static_cast<std::size_t>(N));
    double prev = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.ao_max_iter; ++iter) {
        out.w = aligned_aggregation(out.amplitudes, gains, sigma_w2);
        for (int k = 0; k < K; ++k) {
            for (int n = 0; n < N; ++n) ak[static_cast<std::size_t>(n)] = out.w[n] * gains(k, n);
            std::vector<double> ref(out.amplitudes.row(k).begin(), out.amplitudes.row(k).end());
            std::vector<double> b;
            try {
                b = solve_p12_sca(ak, power_cap, budget.rho_prime[k], ref);
            } catch (const ScaStepError&) {
                b = std::move(ref);  // keep the expansion point; never move uphill
            }
            for (int n = 0; n < N; ++n) out.amplitudes(k, n) = b[static_cast<std::size_t>(n)];
        }
        const double cur = aligned_mse(out.amplitudes, gains, out.w, sigma_w2).mse_bar;
        out.mse_trace.push_back(cur);
        out.trace.push_back({iter, "ao", -1, cur, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
        out.iterations = iter + 1;
        if (prev - cur < opts.eps_mse) {
            out.converged = true;
            break;
        }
        prev = cur;
    }
    // Final refresh so the reported weights are exactly optimal for the
    // reported amplitudes (can only lower the objective further).
    out.w = aligned_aggregation(out.amplitudes, gains, sigma_w2);
    const double final_mse = aligned_mse(out.amplitudes, gains, out.w, sigma_w2).mse_bar;
    out.mse_trace.push_back(final_mse);
    out.trace.push_back({out.iterations, "ao", -1, final_mse, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    return out;
}

PrimalUpdate admm_primal_update(std::span<const double> b, std::span<const double> a, double power_cap,
                                double rho, double lambda, double mu, double delta, double beta,
                                double denom_floor) {
    if (b.size() != a.size()) throw ConfigError("admm_primal_update: size mismatch");
    if (delta <= 0.0 || beta <= 0.0) throw ConfigError("admm_primal_update: penalties must be positive");
    if (denom_floor <= 0.0) throw ConfigError("admm_primal_update: denominator floor must be positive");
    const double S = std::max(sum_sq(b), 1e-300);
    const double power_hinge = std::max(0.0, lambda + delta * (S - power_cap));
    const double floor_hinge = std::max(0.0, mu + beta * (1.0 / S - rho));
    const double shift = 2.0 * delta * power_hinge - 2.0 * beta * floor_hinge / (S * S);
    PrimalUpdate out;
    out.b.resize(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        double d = a[n] * a[n] + shift;
        if (d < denom_floor) {
            out.denominator_ok = false;
            d = denom_floor;
        }
        out.b[n] = a[n] / d;
    }
    return out;
}

DualUpdate admm_dual_update(double lambda, double mu, double S, double power_cap, double rho,
                            double delta, double beta) {
    if (S <= 0.0) throw ConfigError("admm_dual_update: power must be positive");
    if (power_cap <= 0.0 || rho <= 0.0)
        throw ConfigError("admm_dual_update: cap and inverse floor must be positive");
    DualUpdate out;
    out.lambda = std::max(0.0, lambda + delta * (S - power_cap));
    out.mu = std::max(0.0, mu + beta * (1.0 / S - rho));
    out.gamma_pv = std::max(0.0, S - power_cap) / power_cap;
    out.gamma_sv = std::max(0.0, 1.0 / S - rho) / rho;
    return out;
}

void admm_penalty_update(double& delta, double& beta, double gamma_pv, double gamma_sv,
                         const SolverOptions& opts) {
    delta *= (gamma_pv > opts.eps_pc) ? opts.admm_growth : opts.admm_decay;
    beta *= (gamma_sv > opts.eps_sc) ? opts.admm_growth : opts.admm_decay;
    delta = clamp(delta, opts.penalty_min, opts.penalty_max);
    beta = clamp(beta, opts.penalty_min, opts.penalty_max);
}

double admm_lagrangian(std::span<const double> b, std::span<const double> a, double power_cap,
                       double rho, double lambda, double mu, double delta, double beta) {
    if (delta <= 0.0 || beta <= 0.0) throw ConfigError("admm_lagrangian: penalties must be positive");
    const double S = std::max(sum_sq(b), 1e-300);
    const double g = S - power_cap;
    const double h = 1.0 / S - rho;
    const double pterm = std::max(0.0, lambda + delta * g);
    const double fterm = std::max(0.0, mu + beta * h);
    return fit_objective(a, b) + (pterm * pterm - lambda * lambda) / (2.0 * delta) +
           (fterm * fterm - mu * mu) / (2.0 * beta);
}

AdmmResult run_admm_phase(const RGrid& amplitudes0, std::span<const double> w, const RGrid& gains,
                          const SensingBudget& budget, double power_cap, double sigma_w2,
                          const SolverOptions& opts) {
    const int K = gains.rows(), N = gains.cols();
    if (amplitudes0.rows() != K || amplitudes0.cols() != N)
        throw ConfigError("run_admm_phase: amplitude shape mismatch");
    if (w.size() != static_cast<std::size_t>(N))
        throw ConfigError("run_admm_phase: aggregation size mismatch");
    if (static_cast<int>(budget.rho_prime.size()) != K)
        throw ConfigError("run_admm_phase: budget size does not match device count");

    AdmmResult out;
    out.amplitudes = amplitudes0;
    out.devices.resize(static_cast<std::size_t>(K));

    std::vector<double> a(static_cast<std::size_t>(N));
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) a[static_cast<std::size_t>(n)] = w[n] * gains(k, n);
        const double rho = budget.rho[k];
        std::vector<double> b_in(out.amplitudes.row(k).begin(), out.amplitudes.row(k).end());
        const double f_in = fit_objective(a, b_in);

        std::vector<double> b = b_in;
        std::vector<double> best_b = b_in;
        double best_f = f_in;
        double lambda = 0.0, mu = 0.0;
        double delta = opts.admm_delta0, beta = opts.admm_beta0;
        double prev_S = sum_sq(b);
        double prev_dS = 0.0;

        DeviceRefineResult& dev = out.devices[static_cast<std::size_t>(k)];
        for (int it = 1; it <= opts.admm_max_iter; ++it) {
            PrimalUpdate pu =
                admm_primal_update(b, a, power_cap, rho, lambda, mu, delta, beta, opts.denom_floor);
            if (!pu.denominator_ok) {
                // Penalty overshoot: back the penalties off once and retry.
                delta = clamp(delta * opts.admm_decay, opts.penalty_min, opts.penalty_max);
                beta = clamp(beta * opts.admm_decay, opts.penalty_min, opts.penalty_max);
                pu = admm_primal_update(b, a, power_cap, rho, lambda, mu, delta, beta,
                                        opts.denom_floor);
            }
            double S_new = sum_sq(pu.b);
            double dS = S_new - prev_S;
            if (prev_dS * dS < 0.0 && std::abs(dS) > 0.1 * prev_S) {
                // Oscillating total power: damp the step halfway.
                for (std::size_t n = 0; n < pu.b.size(); ++n) pu.b[n] = 0.5 * (pu.b[n] + b[n]);
                S_new = sum_sq(pu.b);
                dS = S_new - prev_S;
            }
            b = std::move(pu.b);

            const DualUpdate du = admm_dual_update(lambda, mu, S_new, power_cap, rho, delta, beta);
            lambda = du.lambda;
            mu = du.mu;
            admm_penalty_update(delta, beta, du.gamma_pv, du.gamma_sv, opts);

            const double f = fit_objective(a, b);
            const bool feasible = du.gamma_pv <= opts.eps_pc && du.gamma_sv <= opts.eps_sc;
            // A feasible iterate that fails to push the incumbent objective
            // down by eps_mse means the refinement has stalled; that is the
            // termination event (objective stalled AND both violation
            // measures inside tolerance).
            const bool stalled = feasible && f >= best_f - opts.eps_mse;
            if (feasible && f < best_f) {
                best_f = f;
                best_b = b;
            }

            for (int n = 0; n < N; ++n) out.amplitudes(k, n) = b[static_cast<std::size_t>(n)];
            const double mse = aligned_mse(out.amplitudes, gains, w, sigma_w2).mse_bar;
            out.trace.push_back(
                {it, "admm", k, mse, du.gamma_pv, du.gamma_sv, lambda, mu, delta, beta});

            dev.iterations = it;
            dev.mse_ok = stalled;
            dev.pv_ok = du.gamma_pv <= opts.eps_pc;
            dev.sv_ok = du.gamma_sv <= opts.eps_sc;
            if (dev.mse_ok && dev.pv_ok && dev.sv_ok) {
                dev.converged = true;
                break;
            }
            prev_S = S_new;
            prev_dS = dS;
        }
        if (!dev.converged) out.warning = true;

        // Accept the refinement only when a feasible iterate strictly improved
        // this device's fit; otherwise keep the incoming amplitudes.
        dev.improved = best_f < f_in;
        const std::vector<double>& accepted = dev.improved ? best_b : b_in;
        dev.b = accepted;
        dev.objective = dev.improved ? best_f : f_in;
        for (int n = 0; n < N; ++n) out.amplitudes(k, n) = accepted[static_cast<std::size_t>(n)];
        const double accepted_S = sum_sq(accepted);
        const DualUpdate final_du =
            admm_dual_update(0.0, 0.0, accepted_S, power_cap, rho, delta, beta);
        out.trace.push_back({dev.iterations + 1, "admm", k,
                             aligned_mse(out.amplitudes, gains, w, sigma_w2).mse_bar,
                             final_du.gamma_pv, final_du.gamma_sv, lambda, mu, delta, beta});
    }
    return out;
}

RGrid baseline_epa(int K, int N, double power_cap, bool printed_variant) {
    if (K < 1 || N < 1) throw ConfigError("baseline_epa: need at least one device and subcarrier");
    if (power_cap <= 0.0) throw ConfigError("baseline_epa: power cap must be positive");
    const double amp = printed_variant ? std::sqrt(power_cap) / static_cast<double>(N)
                                       : std::sqrt(power_cap / static_cast<double>(N));
    return RGrid(K, N, amp);
}

RGrid baseline_opas(const CGrid& H, const SensingBudget& budget, double power_cap, double sigma_w2) {
    const int K = H.rows(), N = H.cols();
    if (static_cast<int>(budget.rho_prime.size()) != K)
        throw ConfigError("baseline_opas: budget size does not match device count");
    const RGrid gains = channel_gains(H);

    RGrid amps = baseline_epa(K, N, power_cap, false);
    // Two-round fixed point: weights from the equal-power design, clamp the
    // inversion, refresh the weights once, clamp again.
    for (int round = 0; round < 2; ++round) {
        const std::vector<double> w = aligned_aggregation(amps, gains, sigma_w2);
        RGrid next(K, N);
        for (int k = 0; k < K; ++k) {
            const double lo = std::sqrt(budget.rho_prime[k] / static_cast<double>(N));
            const double hi = std::sqrt(power_cap / static_cast<double>(N));
            for (int n = 0; n < N; ++n) {
                const double wh = std::abs(w[n]) * gains(k, n);
                const double inv = (wh > 0.0) ? 1.0 / wh : hi;
                next(k, n) = clamp(inv, lo, hi);
            }
        }
        amps = std::move(next);
    }
    return amps;
}

MseBreakdown evaluate_design(const RGrid& amplitudes, const CGrid& H, double sigma_w2) {
    const RGrid gains = channel_gains(H);
    const std::vector<double> w = aligned_aggregation(amplitudes, gains, sigma_w2);
    return aligned_mse(amplitudes, gains, w, sigma_w2);
}

SolveReport solve_two_phase(const CGrid& H, const SensingBudget& budget, const SystemConfig& cfg,
                            bool with_refinement) {
    using clock = std::chrono::steady_clock;
    const RGrid gains = channel_gains(H);
    SolveReport rep;

    const auto t0 = clock::now();
    AoResult ao = run_ao_phase(gains, budget, cfg.P_t_mw, cfg.sigma_w2_mw, cfg.solver);
    const auto t1 = clock::now();
    rep.ao_seconds = std::chrono::duration<double>(t1 - t0).count();
    rep.ao_iterations = ao.iterations;
    rep.ao_converged = ao.converged;
    rep.trace = std::move(ao.trace);
    rep.amplitudes = std::move(ao.amplitudes);

    if (with_refinement) {
        AdmmResult refined = run_admm_phase(rep.amplitudes, ao.w, gains, budget, cfg.P_t_mw,
                                            cfg.sigma_w2_mw, cfg.solver);
        const auto t2 = clock::now();
        rep.refine_seconds = std::chrono::duration<double>(t2 - t1).count();
        rep.amplitudes = std::move(refined.amplitudes);
        rep.refinement = std::move(refined.devices);
        rep.refine_warning = refined.warning;
        rep.trace.insert(rep.trace.end(), refined.trace.begin(), refined.trace.end());
    }

    // Give each coefficient the conjugate channel phase (zero-phase weights);
    // the MMSE weights of that design come out real and the pair is mutually
    // consistent in one pass.
    const std::vector<cplx> unit(static_cast<std::size_t>(H.cols()), cplx{1.0, 0.0});
    rep.complex_tx = align_phase(rep.amplitudes, H, unit);
    rep.aggregation = optimal_aggregation(rep.complex_tx, H, cfg.sigma_w2_mw);
    rep.breakdown = mse_objective(rep.complex_tx, H, rep.aggregation, cfg.sigma_w2_mw);
    return rep;
}

}  // namespace iscc
