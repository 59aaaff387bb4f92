#include "iscc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace iscc {

using nlohmann::json;

double dbm_to_linear(double dbm) {
    if (!std::isfinite(dbm)) throw ConfigError("dbm_to_linear: non-finite input");
    return std::pow(10.0, dbm / 10.0);
}

double linear_to_dbm(double mw) {
    if (!std::isfinite(mw) || mw <= 0.0) throw ConfigError("linear_to_dbm: input must be positive and finite");
    return 10.0 * std::log10(mw);
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
}

void check_positive_finite(double v, const char* name) {
    require(std::isfinite(v) && v > 0.0, std::string(name) + " must be positive and finite");
}

}  // namespace

void SystemConfig::validate() const {
    require(K >= 1, "K must be >= 1");
    require(N >= 2, "N must be >= 2 (accuracy bounds need at least two subcarriers)");
    require(M >= 2, "M must be >= 2 (accuracy bounds need at least two symbols)");
    require(N_c >= 0 && N_c <= N, "N_c must lie in [0, N]");
    check_positive_finite(delta_f_hz, "delta_f_hz");
    check_positive_finite(T_o_s, "T_o_s");
    check_positive_finite(f_c_hz, "f_c_hz");
    check_positive_finite(c0_mps, "c0_mps");
    check_positive_finite(P_t_mw, "P_t");
    check_positive_finite(sigma_w2_mw, "sigma_w2");
    check_positive_finite(sigma_z2_mw, "sigma_z2");
    check_positive_finite(alpha, "alpha");
    require(std::isfinite(interference_power) && interference_power >= 0.0,
            "interference_power must be nonnegative");
    require(comm_taps >= 1, "comm_taps must be >= 1");
    require(comm_taps <= N_c, "comm_taps must not exceed the cyclic prefix length");
    require(interference_taps >= 1, "interference_taps must be >= 1");
    require(interference_taps <= N_c, "interference_taps must not exceed the cyclic prefix length");
    require(static_cast<int>(eta_m2.size()) == K, "eta must have one entry per device");
    require(static_cast<int>(xi_m2s2.size()) == K, "xi must have one entry per device");
    for (double v : eta_m2) check_positive_finite(v, "eta");
    for (double v : xi_m2s2) check_positive_finite(v, "xi");
    require(static_cast<int>(roundtrip_delay.size()) == K, "roundtrip_delay must have one entry per device");
    for (int d : roundtrip_delay)
        require(d >= 0 && d < N_c, "roundtrip_delay entries must lie inside the cyclic prefix");

    require(solver.eps_mse > 0 && solver.eps_pc > 0 && solver.eps_sc > 0,
            "solver tolerances must be positive");
    require(solver.admm_growth > 1.0, "admm_growth must exceed 1");
    require(solver.admm_decay > 0.0 && solver.admm_decay < 1.0, "admm_decay must lie in (0, 1)");
    require(solver.admm_max_iter >= 1 && solver.ao_max_iter >= 1, "iteration caps must be >= 1");
    require(solver.penalty_min > 0 && solver.penalty_max >= solver.penalty_min,
            "penalty clamp range invalid");
    require(solver.admm_delta0 > 0 && solver.admm_beta0 > 0, "initial penalties must be positive");
    require(solver.denom_floor > 0, "denom_floor must be positive");
}

SystemConfig SystemConfig::defaults() {
    SystemConfig cfg;
    cfg.eta_m2.assign(cfg.K, 1.0);
    cfg.xi_m2s2.assign(cfg.K, 1.0);
    cfg.roundtrip_delay.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) cfg.roundtrip_delay[k] = std::min(3 + k, cfg.N_c - 1);
    cfg.validate();
    return cfg;
}

SensingBudget derive_sensing_budget(const SystemConfig& cfg, const std::vector<double>& eta_m2,
                                    const std::vector<double>& xi_m2s2, double alpha) {
    cfg.validate();
    if (static_cast<int>(eta_m2.size()) != cfg.K || static_cast<int>(xi_m2s2.size()) != cfg.K)
        throw ConfigError("derive_sensing_budget: thresholds must have one entry per device");
    check_positive_finite(alpha, "alpha");

    const double N = cfg.N, M = cfg.M;
    const double c2 = cfg.c0_mps * cfg.c0_mps;
    const double pi2 = kPi * kPi;
    // Distance: CRLB(d) = 3 sz2 c0^2 / (8 pi^2 df^2 ||B||^2 a^2 M N (N^2-1))  <= eta
    // Velocity: CRLB(v) = 3 sz2 c0^2 / (8 pi^2 To^2 fc^2 ||B||^2 a^2 M N (M^2-1)) <= xi
    // Solving each for ||B||^2 gives the per-device power floor.
    const double dist_num = 3.0 * cfg.sigma_z2_mw * c2 /
                            (8.0 * pi2 * cfg.delta_f_hz * cfg.delta_f_hz * alpha * alpha * M * N * (N * N - 1.0));
    const double vel_num = 3.0 * cfg.sigma_z2_mw * c2 /
                           (8.0 * pi2 * cfg.T_o_s * cfg.T_o_s * cfg.f_c_hz * cfg.f_c_hz * alpha * alpha * M * N *
                            (M * M - 1.0));

    SensingBudget b;
    b.eta_prime.resize(cfg.K);
    b.xi_prime.resize(cfg.K);
    b.rho_prime.resize(cfg.K);
    b.rho.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        check_positive_finite(eta_m2[k], "eta");
        check_positive_finite(xi_m2s2[k], "xi");
        b.eta_prime[k] = dist_num / eta_m2[k];
        b.xi_prime[k] = vel_num / xi_m2s2[k];
        b.rho_prime[k] = std::max(b.eta_prime[k], b.xi_prime[k]);
        b.rho[k] = 1.0 / b.rho_prime[k];
        if (b.rho_prime[k] > cfg.P_t_mw) {
            std::ostringstream os;
            os << "sensing budget infeasible for device " << k << ": required power rho'_" << k << " = "
               << b.rho_prime[k] << " mW exceeds the cap P_t = " << cfg.P_t_mw
               << " mW (enforced reading: rho'_k <= P_t; the inverse-power reading rho_k = " << b.rho[k]
               << " 1/mW <= P_t holds vacuously and is not the binding condition)";
            throw InfeasibleBudgetError(os.str(), k);
        }
    }
    return b;
}

SensingBudget derive_sensing_budget(const SystemConfig& cfg) {
    return derive_sensing_budget(cfg, cfg.eta_m2, cfg.xi_m2s2, cfg.alpha);
}

void thresholds_for_floor(const SystemConfig& cfg, double alpha, double rho_prime_mw, double& eta_out,
                          double& xi_out) {
    check_positive_finite(rho_prime_mw, "rho_prime");
    const double N = cfg.N, M = cfg.M;
    const double c2 = cfg.c0_mps * cfg.c0_mps;
    const double pi2 = kPi * kPi;
    const double dist_num = 3.0 * cfg.sigma_z2_mw * c2 /
                            (8.0 * pi2 * cfg.delta_f_hz * cfg.delta_f_hz * alpha * alpha * M * N * (N * N - 1.0));
    const double vel_num = 3.0 * cfg.sigma_z2_mw * c2 /
                           (8.0 * pi2 * cfg.T_o_s * cfg.T_o_s * cfg.f_c_hz * cfg.f_c_hz * alpha * alpha * M * N *
                            (M * M - 1.0));
    // Both accuracy floors are placed at rho_prime, so the max is exact there.
    eta_out = dist_num / rho_prime_mw;
    xi_out = vel_num / rho_prime_mw;
}

namespace {

const char* const kKnownKeys[] = {
    "K", "N", "M", "N_c", "delta_f_hz", "T_o_s", "f_c_hz", "P_t_dbm", "sigma_w2_dbm", "sigma_z2_dbm",
    "eta", "xi", "seed", "c0_mps", "alpha", "comm_taps", "interference_taps", "interference_power",
    "normalize_response", "roundtrip_delay", "eps_mse", "eps_pc", "eps_sc", "admm_growth", "admm_decay",
    "admm_max_iter", "ao_max_iter", "epa_printed_variant"};

std::vector<double> broadcast(const json& j, int K, const char* name) {
    std::vector<double> out;
    if (j.is_number()) {
        out.assign(K, j.get<double>());
    } else if (j.is_array()) {
        if (static_cast<int>(j.size()) != K)
            throw ConfigError(std::string("config: ") + name + " array must have K entries");
        for (const auto& v : j) out.push_back(v.get<double>());
    } else {
        throw ConfigError(std::string("config: ") + name + " must be a number or array");
    }
    return out;
}

SystemConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool known = false;
        for (const char* k : kKnownKeys)
            if (key == k) known = true;
        if (!known) throw ConfigError("config: unknown key '" + key + "'");
    }

    SystemConfig cfg;
    auto geti = [&](const char* key, int dflt) { return j.contains(key) ? j.at(key).get<int>() : dflt; };
    auto getd = [&](const char* key, double dflt) {
        return j.contains(key) ? j.at(key).get<double>() : dflt;
    };
    cfg.K = geti("K", cfg.K);
    cfg.N = geti("N", cfg.N);
    cfg.M = geti("M", cfg.M);
    cfg.N_c = geti("N_c", cfg.N_c);
    cfg.delta_f_hz = getd("delta_f_hz", cfg.delta_f_hz);
    cfg.T_o_s = getd("T_o_s", cfg.T_o_s);
    cfg.f_c_hz = getd("f_c_hz", cfg.f_c_hz);
    cfg.c0_mps = getd("c0_mps", cfg.c0_mps);
    cfg.P_t_mw = dbm_to_linear(getd("P_t_dbm", linear_to_dbm(cfg.P_t_mw)));
    cfg.sigma_w2_mw = dbm_to_linear(getd("sigma_w2_dbm", linear_to_dbm(cfg.sigma_w2_mw)));
    // Echo noise defaults to the uplink noise unless given explicitly.
    cfg.sigma_z2_mw =
        j.contains("sigma_z2_dbm") ? dbm_to_linear(j.at("sigma_z2_dbm").get<double>()) : cfg.sigma_w2_mw;
    cfg.seed = j.contains("seed") ? j.at("seed").get<uint64_t>() : cfg.seed;
    cfg.alpha = getd("alpha", cfg.alpha);
    cfg.comm_taps = geti("comm_taps", cfg.comm_taps);
    cfg.interference_taps = geti("interference_taps", cfg.interference_taps);
    cfg.interference_power = getd("interference_power", cfg.interference_power);
    cfg.normalize_response =
        j.contains("normalize_response") ? j.at("normalize_response").get<bool>() : cfg.normalize_response;

    cfg.eta_m2 = j.contains("eta") ? broadcast(j.at("eta"), cfg.K, "eta") : std::vector<double>(cfg.K, 1.0);
    cfg.xi_m2s2 = j.contains("xi") ? broadcast(j.at("xi"), cfg.K, "xi") : std::vector<double>(cfg.K, 1.0);

    if (j.contains("roundtrip_delay")) {
        const auto& arr = j.at("roundtrip_delay");
        if (!arr.is_array() || static_cast<int>(arr.size()) != cfg.K)
            throw ConfigError("config: roundtrip_delay must be a K-element array");
        cfg.roundtrip_delay.clear();
        for (const auto& v : arr) cfg.roundtrip_delay.push_back(v.get<int>());
    } else {
        cfg.roundtrip_delay.resize(cfg.K);
        for (int k = 0; k < cfg.K; ++k) cfg.roundtrip_delay[k] = std::min(3 + k, cfg.N_c - 1);
    }

    cfg.solver.eps_mse = getd("eps_mse", cfg.solver.eps_mse);
    cfg.solver.eps_pc = getd("eps_pc", cfg.solver.eps_pc);
    cfg.solver.eps_sc = getd("eps_sc", cfg.solver.eps_sc);
    cfg.solver.admm_growth = getd("admm_growth", cfg.solver.admm_growth);
    cfg.solver.admm_decay = getd("admm_decay", cfg.solver.admm_decay);
    cfg.solver.admm_max_iter = geti("admm_max_iter", cfg.solver.admm_max_iter);
    cfg.solver.ao_max_iter = geti("ao_max_iter", cfg.solver.ao_max_iter);
    cfg.solver.epa_printed_variant = j.contains("epa_printed_variant")
                                         ? j.at("epa_printed_variant").get<bool>()
                                         : cfg.solver.epa_printed_variant;

    cfg.validate();
    return cfg;
}

json to_json(const SystemConfig& cfg) {
    json j;
    j["K"] = cfg.K;
    j["N"] = cfg.N;
    j["M"] = cfg.M;
    j["N_c"] = cfg.N_c;
    j["delta_f_hz"] = cfg.delta_f_hz;
    j["T_o_s"] = cfg.T_o_s;
    j["f_c_hz"] = cfg.f_c_hz;
    j["c0_mps"] = cfg.c0_mps;
    j["P_t_dbm"] = linear_to_dbm(cfg.P_t_mw);
    j["sigma_w2_dbm"] = linear_to_dbm(cfg.sigma_w2_mw);
    j["sigma_z2_dbm"] = linear_to_dbm(cfg.sigma_z2_mw);
    j["eta"] = cfg.eta_m2;
    j["xi"] = cfg.xi_m2s2;
    j["seed"] = cfg.seed;
    j["alpha"] = cfg.alpha;
    j["comm_taps"] = cfg.comm_taps;
    j["interference_taps"] = cfg.interference_taps;
    j["interference_power"] = cfg.interference_power;
    j["normalize_response"] = cfg.normalize_response;
    j["roundtrip_delay"] = cfg.roundtrip_delay;
    j["eps_mse"] = cfg.solver.eps_mse;
    j["eps_pc"] = cfg.solver.eps_pc;
    j["eps_sc"] = cfg.solver.eps_sc;
    j["admm_growth"] = cfg.solver.admm_growth;
    j["admm_decay"] = cfg.solver.admm_decay;
    j["admm_max_iter"] = cfg.solver.admm_max_iter;
    j["ao_max_iter"] = cfg.solver.ao_max_iter;
    j["epa_printed_variant"] = cfg.solver.epa_printed_variant;
    return j;
}

}  // namespace

SystemConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
    }
    return from_json(j);
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

void save_config(const SystemConfig& cfg, const std::string& path) {
    cfg.validate();
    std::ofstream out(path);
    if (!out) throw ConfigError("config: cannot write '" + path + "'");
    out << to_json(cfg).dump(2) << "\n";
}

std::string config_to_json_text(const SystemConfig& cfg) { return to_json(cfg).dump(); }

}  // namespace iscc
