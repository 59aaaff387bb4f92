#include "iscc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "iscc/aircomp.hpp"
#include "iscc/channel.hpp"
#include "iscc/optimizer.hpp"
#include "iscc/rng.hpp"
#include "iscc/sensing.hpp"
#include "iscc/waveform.hpp"

namespace iscc {

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

double device_power(const RGrid& amps, int k) {
    double s = 0.0;
    for (int n = 0; n < amps.cols(); ++n) s += amps(k, n) * amps(k, n);
    return s;
}

bool within_band(const RGrid& amps, const SensingBudget& budget, const SystemConfig& cfg) {
    for (int k = 0; k < amps.rows(); ++k) {
        const double s = device_power(amps, k);
        if (s > cfg.P_t_mw * (1.0 + cfg.solver.eps_pc)) return false;
        if (s < budget.rho_prime[static_cast<std::size_t>(k)] * (1.0 - cfg.solver.eps_sc)) return false;
    }
    return true;
}

RGrid design_for_method(const std::string& method, const CGrid& H, const SensingBudget& budget,
                        const SystemConfig& cfg) {
    if (method == "proposed") return solve_two_phase(H, budget, cfg, true).amplitudes;
    if (method == "sca") return solve_two_phase(H, budget, cfg, false).amplitudes;
    if (method == "opas") return baseline_opas(H, budget, cfg.P_t_mw, cfg.sigma_w2_mw);
    if (method == "epa")
        return baseline_epa(cfg.K, cfg.N, cfg.P_t_mw, cfg.solver.epa_printed_variant);
    throw ConfigError("unknown method '" + method + "'");
}

SystemConfig apply_grid_value(const SystemConfig& cfg, const std::string& id, double v) {
    SystemConfig pc = cfg;
    if (id == "power_sweep") {
        pc.P_t_mw = dbm_to_linear(v);
    } else if (id == "threshold_sweep") {
        if (v <= 0.0) throw ConfigError("threshold_sweep: scale factors must be positive");
        for (auto& e : pc.eta_m2) e *= v;
        for (auto& x : pc.xi_m2s2) x *= v;
    } else if (id == "subcarrier_sweep") {
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9 || r < 2.0)
            throw ConfigError("subcarrier_sweep: grid values must be integers >= 2");
        pc.N = static_cast<int>(r);
        pc.N_c = std::min(pc.N_c, pc.N);
    } else {
        throw ConfigError("unknown experiment '" + id +
                          "' (expected power_sweep, threshold_sweep, or subcarrier_sweep)");
    }
    pc.validate();
    return pc;
}

struct DrawOutcome {
    double mse_bar = std::numeric_limits<double>::quiet_NaN();
    double mse = std::numeric_limits<double>::quiet_NaN();
    double runtime_ms = 0.0;
    bool feasible = false;
    bool valid = false;
};

}  // namespace

void parallel_for(int n_items, int n_threads, const std::function<void(int)>& fn) {
    if (n_items < 0) throw ConfigError("parallel_for: negative item count");
    if (n_threads < 1) throw ConfigError("parallel_for: need at least one thread");
    if (n_items == 0) return;
    n_threads = std::min(n_threads, n_items);
    if (n_threads == 1) {
        for (int i = 0; i < n_items; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < n_items; i += n_threads) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

ResultTable run_experiment(const ExperimentSpec& spec, const SystemConfig& cfg) {
    if (spec.grid.empty()) throw ConfigError("run_experiment: empty grid");
    if (spec.n_draws < 1) throw ConfigError("run_experiment: need at least one draw");
    if (spec.methods.empty()) throw ConfigError("run_experiment: no methods selected");
    for (const auto& m : spec.methods)
        if (m != "proposed" && m != "sca" && m != "opas" && m != "epa")
            throw ConfigError("run_experiment: unknown method '" + m + "'");

    const int G = static_cast<int>(spec.grid.size());
    const int D = spec.n_draws;
    const int NM = static_cast<int>(spec.methods.size());

    std::vector<SystemConfig> points;
    std::vector<SensingBudget> budgets(static_cast<std::size_t>(G));
    std::vector<bool> point_ok(static_cast<std::size_t>(G), false);
    ResultTable table;
    points.reserve(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) {
        points.push_back(apply_grid_value(cfg, spec.id, spec.grid[static_cast<std::size_t>(g)]));
        try {
            budgets[static_cast<std::size_t>(g)] = derive_sensing_budget(points.back());
            point_ok[static_cast<std::size_t>(g)] = true;
        } catch (const InfeasibleBudgetError&) {
            table.infeasible_grid_values.push_back(spec.grid[static_cast<std::size_t>(g)]);
        }
    }

    std::vector<DrawOutcome> outcomes(static_cast<std::size_t>(G) * D * NM);
    parallel_for(G * D, spec.n_threads, [&](int item) {
        const int g = item / D;
        const int d = item % D;
        if (!point_ok[static_cast<std::size_t>(g)]) return;
        const SystemConfig& pc = points[static_cast<std::size_t>(g)];
        const SensingBudget& budget = budgets[static_cast<std::size_t>(g)];
        RngStream chan = rng_substream(pc.seed, "chan/draw=" + std::to_string(d));
        const CommChannel comm = draw_comm_channel(pc, chan);
        for (int mi = 0; mi < NM; ++mi) {
            const auto t0 = std::chrono::steady_clock::now();
            const RGrid amps =
                design_for_method(spec.methods[static_cast<std::size_t>(mi)], comm.freq_response,
                                  budget, pc);
            const auto t1 = std::chrono::steady_clock::now();
            const MseBreakdown br = evaluate_design(amps, comm.freq_response, pc.sigma_w2_mw);
            DrawOutcome& o = outcomes[(static_cast<std::size_t>(g) * D + d) * NM + mi];
            o.mse_bar = br.mse_bar;
            o.mse = br.mse;
            o.runtime_ms =
                spec.no_timing ? 0.0 : std::chrono::duration<double, std::milli>(t1 - t0).count();
            o.feasible = within_band(amps, budget, pc);
            o.valid = true;
        }
    });

    for (int g = 0; g < G; ++g) {
        for (int mi = 0; mi < NM; ++mi) {
            ResultRow row;
            row.method = spec.methods[static_cast<std::size_t>(mi)];
            row.grid_value = spec.grid[static_cast<std::size_t>(g)];
            double sum = 0.0, sum_sq = 0.0, sum_mse = 0.0, sum_rt = 0.0;
            int feasible = 0, valid = 0;
            for (int d = 0; d < D; ++d) {
                const DrawOutcome& o = outcomes[(static_cast<std::size_t>(g) * D + d) * NM + mi];
                if (!o.valid) continue;
                ++valid;
                sum_rt += o.runtime_ms;
                if (!o.feasible) continue;
                ++feasible;
                sum += o.mse_bar;
                sum_sq += o.mse_bar * o.mse_bar;
                sum_mse += o.mse;
            }
            row.draws_used = feasible;
            row.feasibility_rate = valid ? static_cast<double>(feasible) / valid : 0.0;
            row.mean_runtime_ms = valid ? sum_rt / valid : 0.0;
            if (feasible > 0) {
                row.mean_mse_bar = sum / feasible;
                row.mean_mse = sum_mse / feasible;
                if (feasible > 1) {
                    const double var =
                        std::max(0.0, (sum_sq - sum * sum / feasible) / (feasible - 1));
                    row.std_err = std::sqrt(var / feasible);
                }
            } else {
                row.mean_mse_bar = std::numeric_limits<double>::quiet_NaN();
                row.mean_mse = std::numeric_limits<double>::quiet_NaN();
                row.std_err = std::numeric_limits<double>::quiet_NaN();
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

void write_result_csv(const ResultTable& table, const ExperimentSpec& spec, const SystemConfig& cfg,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << "# experiment results\n";
    out << "# config: " << config_to_json_text(cfg) << "\n";
    out << "# seed: " << cfg.seed << "\n";
    out << "# experiment: " << spec.id << "\n";
    std::vector<std::string> gv;
    gv.reserve(spec.grid.size());
    for (double v : spec.grid) gv.push_back(fmt(v));
    out << "# grid: " << join(gv, ',') << "\n";
    out << "# draws: " << spec.n_draws << "\n";
    out << "# methods: " << join(spec.methods, ',') << "\n";
    out << "# no_timing: " << (spec.no_timing ? 1 : 0) << "\n";
    if (!table.infeasible_grid_values.empty()) {
        std::vector<std::string> iv;
        for (double v : table.infeasible_grid_values) iv.push_back(fmt(v));
        out << "# infeasible_grid_values: " << join(iv, ',') << "\n";
    }
    out << "method,grid_value,mean_mse_bar,std_err,mean_mse,mean_runtime_ms,feasibility_rate,draws_"
           "used\n";
    for (const auto& r : table.rows) {
        out << r.method << ',' << fmt(r.grid_value) << ',' << fmt(r.mean_mse_bar) << ','
            << fmt(r.std_err) << ',' << fmt(r.mean_mse) << ',' << fmt(r.mean_runtime_ms) << ','
            << fmt(r.feasibility_rate) << ',' << r.draws_used << "\n";
    }
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

void run_convergence_trace(const SystemConfig& cfg, const std::string& path, bool no_timing) {
    const SensingBudget budget = derive_sensing_budget(cfg);
    RngStream chan = rng_substream(cfg.seed, "chan/draw=0");
    const CommChannel comm = draw_comm_channel(cfg, chan);
    const SolveReport rep = solve_two_phase(comm.freq_response, budget, cfg, true);

    int segments = 0;
    int last_device = -2;
    for (const auto& row : rep.trace) {
        if (row.phase == "admm" && row.device != last_device) {
            ++segments;
            last_device = row.device;
        }
    }

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << "# solver trace\n";
    out << "# config: " << config_to_json_text(cfg) << "\n";
    out << "# seed: " << cfg.seed << "\n";
    out << "# ao_iterations: " << rep.ao_iterations << "\n";
    out << "# ao_converged: " << (rep.ao_converged ? 1 : 0) << "\n";
    out << "# ao_seconds: " << fmt(no_timing ? 0.0 : rep.ao_seconds) << "\n";
    out << "# refine_seconds: " << fmt(no_timing ? 0.0 : rep.refine_seconds) << "\n";
    out << "# admm_segments: " << segments << "\n";
    out << "# refine_warning: " << (rep.refine_warning ? 1 : 0) << "\n";
    for (std::size_t k = 0; k < rep.refinement.size(); ++k) {
        const DeviceRefineResult& d = rep.refinement[k];
        out << "# device " << k << ": iterations=" << d.iterations
            << " converged=" << (d.converged ? 1 : 0) << " mse_ok=" << (d.mse_ok ? 1 : 0)
            << " pv_ok=" << (d.pv_ok ? 1 : 0) << " sv_ok=" << (d.sv_ok ? 1 : 0)
            << " improved=" << (d.improved ? 1 : 0) << "\n";
    }
    out << "# final_mse_bar: " << fmt(rep.breakdown.mse_bar) << "\n";
    out << "iteration,phase,device,mse_bar,gamma_pv,gamma_sv,lambda,mu,delta,beta\n";
    for (const auto& row : rep.trace) {
        out << row.iteration << ',' << row.phase << ',' << row.device << ',' << fmt(row.mse_bar)
            << ',' << fmt(row.gamma_pv) << ',' << fmt(row.gamma_sv) << ',' << fmt(row.lambda) << ','
            << fmt(row.mu) << ',' << fmt(row.delta) << ',' << fmt(row.beta) << "\n";
    }
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

GridOracleResult brute_force_grid_min(const RGrid& gains, double power_cap,
                                      std::span<const double> floors, double sigma_w2, double step) {
    const int K = gains.rows(), N = gains.cols();
    const int dims = K * N;
    if (dims < 1 || dims > 6)
        throw ConfigError("brute_force_grid_min: lattice search supports 1-6 amplitude dimensions");
    if (floors.size() != static_cast<std::size_t>(K))
        throw ConfigError("brute_force_grid_min: one floor per device required");
    if (step <= 0.0 || power_cap <= 0.0)
        throw ConfigError("brute_force_grid_min: step and cap must be positive");

    const int steps = static_cast<int>(std::floor(std::sqrt(power_cap) / step));
    const int levels = steps + 1;
    std::vector<int> idx(static_cast<std::size_t>(dims), 0);
    std::vector<double> b(static_cast<std::size_t>(dims), 0.0);

    GridOracleResult out;
    out.grid_min_mse_bar = std::numeric_limits<double>::infinity();
    std::vector<double> best(static_cast<std::size_t>(dims), 0.0);

    const double cap_tol = power_cap * 1e-12;
    bool done = false;
    while (!done) {
        for (int i = 0; i < dims; ++i) b[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i)] * step;
        bool feasible = true;
        for (int k = 0; k < K && feasible; ++k) {
            double s = 0.0;
            for (int n = 0; n < N; ++n) {
                const double v = b[static_cast<std::size_t>(k * N + n)];
                s += v * v;
            }
            if (s > power_cap + cap_tol || s < floors[static_cast<std::size_t>(k)] * (1.0 - 1e-12))
                feasible = false;
        }
        if (feasible) {
            ++out.feasible_points;
            double mse = 0.0;
            for (int n = 0; n < N; ++n) {
                double num = 0.0, den = sigma_w2;
                for (int k = 0; k < K; ++k) {
                    const double gb = gains(k, n) * b[static_cast<std::size_t>(k * N + n)];
                    num += gb;
                    den += gb * gb;
                }
                const double w = (den > 0.0) ? num / den : 0.0;
                for (int k = 0; k < K; ++k) {
                    const double e = w * gains(k, n) * b[static_cast<std::size_t>(k * N + n)] - 1.0;
                    mse += e * e;
                }
                mse += sigma_w2 * w * w;
            }
            if (mse < out.grid_min_mse_bar) {
                out.grid_min_mse_bar = mse;
                best = b;
            }
        }
        // odometer increment
        int d = 0;
        for (; d < dims; ++d) {
            if (++idx[static_cast<std::size_t>(d)] < levels) break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
        if (d == dims) done = true;
    }
    if (out.feasible_points == 0)
        throw ConfigError("brute_force_grid_min: no lattice point satisfies the constraints");

    // First-order sensitivity of the objective at the lattice minimizer,
    // doubled to cover the detour a continuum optimum may need to reach a
    // feasible lattice neighbor.
    RGrid bgrid(K, N);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) bgrid(k, n) = best[static_cast<std::size_t>(k * N + n)];
    const std::vector<double> w = aligned_aggregation(bgrid, gains, sigma_w2);
    double bound = 0.0;
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            const double a = std::abs(w[static_cast<std::size_t>(n)]) * gains(k, n);
            bound += 2.0 * a * (a * bgrid(k, n) + 1.0) * step + a * a * step * step;
        }
    }
    out.resolution_bound = 2.0 * bound;
    return out;
}

double max_aggregation_improvement(uint64_t seed, int instances, double delta, bool mutate) {
    if (instances < 1) throw ConfigError("max_aggregation_improvement: need at least one instance");
    if (delta <= 0.0) throw ConfigError("max_aggregation_improvement: perturbation must be positive");
    RngStream s(seed, "aggregation-probe");
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        const int K = 1 + static_cast<int>(s.uniform_index(4));
        const double sigma_w2 = 0.001 + 0.1 * s.uniform();
        std::vector<cplx> through(static_cast<std::size_t>(K));
        cplx num{0.0, 0.0};
        double den = sigma_w2;
        for (int k = 0; k < K; ++k) {
            const cplx p = s.cgaussian() * s.cgaussian();  // channel times coefficient
            through[static_cast<std::size_t>(k)] = p;
            num += std::conj(p);
            den += std::norm(p);
        }
        cplx W = num / den;
        if (mutate) W *= 1.001;
        auto objective = [&](cplx w) {
            double o = sigma_w2 * std::norm(w);
            for (const cplx& p : through) o += std::norm(w * p - 1.0);
            return o;
        };
        const double base = objective(W);
        const cplx probes[4] = {W + delta, W - delta, W + cplx{0.0, delta}, W - cplx{0.0, delta}};
        for (const cplx& p : probes) worst = std::max(worst, base - objective(p));
    }
    return worst;
}

EmpiricalAgreement empirical_agreement_check(const SystemConfig& cfg, int n_trials, uint64_t seed) {
    RngStream chan = rng_substream(seed, "chan/validate");
    const CommChannel comm = draw_comm_channel(cfg, chan);
    const SensingBudget budget = derive_sensing_budget(cfg);
    const SolveReport rep = solve_two_phase(comm.freq_response, budget, cfg, true);
    RngStream mc = rng_substream(seed, "mc/validate");
    const EmpiricalMse emp =
        empirical_aircomp_mse(rep.complex_tx, rep.aggregation, comm, cfg.sigma_w2_mw, n_trials, mc);
    EmpiricalAgreement out;
    out.analytic = rep.breakdown.mse;
    out.empirical = emp.mean;
    out.std_err = emp.std_err;
    out.z_score = (emp.std_err > 0.0) ? std::abs(emp.mean - out.analytic) / emp.std_err
                                      : std::numeric_limits<double>::infinity();
    return out;
}

namespace {

double fitted_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace

CrlbScalingCheck crlb_scaling_check(const SystemConfig& cfg, std::span<const int> n_values,
                                    std::span<const int> m_values, double total_power_mw) {
    if (n_values.size() < 2 || m_values.size() < 2)
        throw ConfigError("crlb_scaling_check: need at least two grid points per leg");
    CrlbScalingCheck out;

    const double sz2 = cfg.sigma_z2_mw;
    const double alpha = cfg.alpha;

    // Distance bound across subcarrier counts at fixed burst length and total power.
    {
        const int M = 10;
        std::vector<double> lx, ly;
        double ratio = 0.0;
        for (int N : n_values) {
            std::vector<double> amps(static_cast<std::size_t>(N),
                                     std::sqrt(total_power_mw / static_cast<double>(N)));
            SensingParams theta;
            theta.tau_bar = 0.37;
            theta.v_bar = 0.21;
            theta.alpha = alpha;
            theta.psi = 0.5;
            theta.P = N;
            const SignalMeanFn mean = [amps](const SensingParams& th, int m, int n) {
                return echo_signal_mean(th, amps, m, n);
            };
            const FisherMatrix F = numerical_fisher(mean, theta, sz2, M, N);
            const AveragedCrlb bound = averaged_crlb_from_fisher(F, M, N);
            const double numerical = distance_variance_from_tau_bar(bound.var_tau_bar, cfg);
            const double closed =
                crlb_distance(sz2, cfg.c0_mps, cfg.delta_f_hz, total_power_mw, alpha, M, N);
            lx.push_back(std::log(static_cast<double>(N) * (static_cast<double>(N) * N - 1.0)));
            ly.push_back(std::log(numerical));
            ratio += closed / numerical;
        }
        out.slope_distance_vs_n = fitted_slope(lx, ly);
        out.ratio_distance = ratio / static_cast<double>(n_values.size());
    }

    // Velocity bound across burst lengths at fixed subcarrier count.
    {
        const int N = 16;
        std::vector<double> amps(static_cast<std::size_t>(N),
                                 std::sqrt(total_power_mw / static_cast<double>(N)));
        std::vector<double> lx, ly;
        double ratio = 0.0;
        for (int M : m_values) {
            SensingParams theta;
            theta.tau_bar = 0.37;
            theta.v_bar = 0.21;
            theta.alpha = alpha;
            theta.psi = 0.5;
            theta.P = N;
            const SignalMeanFn mean = [amps](const SensingParams& th, int m, int n) {
                return echo_signal_mean(th, amps, m, n);
            };
            const FisherMatrix F = numerical_fisher(mean, theta, sz2, M, N);
            const AveragedCrlb bound = averaged_crlb_from_fisher(F, M, N);
            const double numerical = velocity_variance_from_v_bar(bound.var_v_bar, cfg);
            const double closed =
                crlb_velocity(sz2, cfg.c0_mps, cfg.T_o_s, cfg.f_c_hz, total_power_mw, alpha, M, N);
            lx.push_back(std::log(static_cast<double>(M) * (static_cast<double>(M) * M - 1.0)));
            ly.push_back(std::log(numerical));
            ratio += closed / numerical;
        }
        out.slope_velocity_vs_m = fitted_slope(lx, ly);
        out.ratio_velocity = ratio / static_cast<double>(m_values.size());
    }
    return out;
}

DecouplingResiduals decoupling_residual_sweep(const SystemConfig& cfg, std::span<const int> m_values,
                                              int n_draws, uint64_t seed) {
    if (n_draws < 1) throw ConfigError("decoupling_residual_sweep: need at least one draw");
    const int K = cfg.K, N = cfg.N;
    const double amp = std::sqrt(cfg.P_t_mw / static_cast<double>(N));
    CGrid coefficients(K, N, cplx{amp, 0.0});
    std::vector<double> amps(static_cast<std::size_t>(N), amp);

    DecouplingResiduals out;
    for (int M : m_values) {
        std::vector<double> pooled;
        pooled.reserve(static_cast<std::size_t>(n_draws) * N);
        for (int d = 0; d < n_draws; ++d) {
            RngStream stream = rng_substream(
                seed, "decoupling/M=" + std::to_string(M) + "/draw=" + std::to_string(d));
            const SensingChannels sens = draw_sensing_channels(cfg, stream, true, 1);
            const double psi = stream.uniform(0.0, 2.0 * kPi);
            std::vector<OfdmFrame> frames;
            frames.reserve(static_cast<std::size_t>(M));
            CGrid device_data(M, N);
            for (int m = 0; m < M; ++m) {
                frames.push_back(make_frame(coefficients, draw_data(K, N, stream), cfg.N_c));
                for (int n = 0; n < N; ++n) device_data(m, n) = frames.back().data(0, n);
            }
            const CGrid windows =
                simulate_echo(frames, sens, 0, 0.0, psi, cfg.T_o_s, 0.0, stream);
            const MatchedFilterBank bank = make_filter_bank(device_data, N);
            const std::vector<cplx> averaged = matched_filter_and_dft(windows, bank);

            SensingParams theta;
            theta.tau_bar = 2.0 * kPi * sens.target_delay[0] / static_cast<double>(N);
            theta.v_bar = 0.0;
            theta.alpha = cfg.alpha;
            theta.psi = psi;
            theta.P = N;
            const CGrid model = decoupling_model(theta, amps, 1, N);
            const std::vector<double> errs =
                entrywise_relative_errors(averaged, model.row(0));
            pooled.insert(pooled.end(), errs.begin(), errs.end());
        }
        out.m_values.push_back(M);
        out.medians.push_back(median_of(std::move(pooled)));
    }
    return out;
}

ValidationReport run_validation_suite(const SystemConfig& cfg, bool mutate_aggregation) {
    ValidationReport report;
    char buf[256];

    {
        ValidationCheck c;
        c.name = "waveform_agreement";
        const EmpiricalAgreement a = empirical_agreement_check(cfg, 10000, cfg.seed);
        c.measured = a.z_score;
        c.limit = 3.0;
        c.pass = a.z_score <= c.limit;
        std::snprintf(buf, sizeof(buf), "analytic=%.6g empirical=%.6g std_err=%.3g", a.analytic,
                      a.empirical, a.std_err);
        c.detail = buf;
        report.checks.push_back(std::move(c));
    }
    {
        ValidationCheck c;
        c.name = "bound_scaling";
        const std::vector<int> nv{16, 32, 64};
        const std::vector<int> mv{10, 20, 50};
        const CrlbScalingCheck s = crlb_scaling_check(cfg, nv, mv, 1.0);
        const double dev =
            std::max(std::abs(s.slope_distance_vs_n + 1.0), std::abs(s.slope_velocity_vs_m + 1.0));
        c.measured = dev;
        c.limit = 0.03;
        c.pass = dev <= c.limit;
        std::snprintf(buf, sizeof(buf),
                      "slope_n=%.5f slope_m=%.5f ratio_distance=%.5f ratio_velocity=%.5f",
                      s.slope_distance_vs_n, s.slope_velocity_vs_m, s.ratio_distance,
                      s.ratio_velocity);
        c.detail = buf;
        report.checks.push_back(std::move(c));
    }
    {
        ValidationCheck c;
        c.name = "decoupled_model";
        const std::vector<int> mv{10, 50, 200};
        const DecouplingResiduals r = decoupling_residual_sweep(cfg, mv, 100, cfg.seed);
        const bool monotone = r.medians[0] > r.medians[1] && r.medians[1] > r.medians[2];
        c.measured = r.medians[2];
        c.limit = 0.05;
        c.pass = monotone && r.medians[2] < c.limit;
        std::snprintf(buf, sizeof(buf), "medians M=10:%.4f M=50:%.4f M=200:%.4f monotone=%d",
                      r.medians[0], r.medians[1], r.medians[2], monotone ? 1 : 0);
        c.detail = buf;
        report.checks.push_back(std::move(c));
    }
    {
        ValidationCheck c;
        c.name = "grid_dominance";
        struct Shape {
            int K, N;
            double cap;
        };
        const Shape shapes[] = {{1, 2, 1.0}, {2, 1, 1.0}, {1, 3, 1.0}, {2, 2, 0.0625}};
        double worst_gap = -std::numeric_limits<double>::infinity();
        std::string detail;
        for (std::size_t i = 0; i < std::size(shapes); ++i) {
            const Shape& sh = shapes[i];
            RngStream gs = rng_substream(cfg.seed, "oracle/instance=" + std::to_string(i));
            RGrid gains(sh.K, sh.N);
            for (int k = 0; k < sh.K; ++k)
                for (int n = 0; n < sh.N; ++n) gains(k, n) = std::abs(gs.cgaussian());
            const double sigma_w2 = 0.1;
            SensingBudget budget;
            for (int k = 0; k < sh.K; ++k) {
                budget.rho_prime.push_back(0.3 * sh.cap);
                budget.rho.push_back(1.0 / (0.3 * sh.cap));
                budget.eta_prime.push_back(0.3 * sh.cap);
                budget.xi_prime.push_back(0.3 * sh.cap);
            }
            SolverOptions opts;
            const AoResult ao = run_ao_phase(gains, budget, sh.cap, sigma_w2, opts);
            const AdmmResult refined =
                run_admm_phase(ao.amplitudes, ao.w, gains, budget, sh.cap, sigma_w2, opts);
            const std::vector<double> w =
                aligned_aggregation(refined.amplitudes, gains, sigma_w2);
            const double solver_mse =
                aligned_mse(refined.amplitudes, gains, w, sigma_w2).mse_bar;
            const GridOracleResult oracle =
                brute_force_grid_min(gains, sh.cap, budget.rho_prime, sigma_w2, 0.01);
            const double gap =
                solver_mse - (oracle.grid_min_mse_bar + oracle.resolution_bound);
            worst_gap = std::max(worst_gap, gap);
            std::snprintf(buf, sizeof(buf), "%sK%dN%d:gap=%.3g", i ? " " : "", sh.K, sh.N, gap);
            detail += buf;
        }
        c.measured = worst_gap;
        c.limit = 0.0;
        c.pass = worst_gap <= 0.0;
        c.detail = detail;
        report.checks.push_back(std::move(c));
    }
    {
        ValidationCheck c;
        c.name = "aggregation_optimality";
        c.measured = max_aggregation_improvement(cfg.seed, 1000, 1e-4, mutate_aggregation);
        c.limit = 1e-12;
        c.pass = c.measured <= c.limit;
        std::snprintf(buf, sizeof(buf), "largest improvement under +-1e-4 nudges%s",
                      mutate_aggregation ? " (weights deliberately corrupted)" : "");
        c.detail = buf;
        report.checks.push_back(std::move(c));
    }

    report.all_pass = true;
    for (const auto& c : report.checks)
        if (!c.pass) report.all_pass = false;
    return report;
}

}  // namespace iscc
