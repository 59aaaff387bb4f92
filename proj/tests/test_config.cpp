#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "iscc/config.hpp"
#include "iscc/types.hpp"

using namespace iscc;

TEST_CASE("dbm conversions") {
    CHECK(dbm_to_linear(0.0) == doctest::Approx(1.0));
    CHECK(dbm_to_linear(10.0) == doctest::Approx(10.0));
    CHECK(dbm_to_linear(-20.0) == doctest::Approx(0.01));
    CHECK(linear_to_dbm(10.0) == doctest::Approx(10.0));
    CHECK(linear_to_dbm(dbm_to_linear(37.3)) == doctest::Approx(37.3));
    CHECK_THROWS_AS(dbm_to_linear(std::nan("")), ConfigError);
    CHECK_THROWS_AS(linear_to_dbm(-1.0), ConfigError);
    CHECK_THROWS_AS(linear_to_dbm(0.0), ConfigError);
}

TEST_CASE("defaults validate and carry the documented values") {
    const SystemConfig cfg = SystemConfig::defaults();
    CHECK(cfg.K == 5);
    CHECK(cfg.N == 64);
    CHECK(cfg.M == 50);
    CHECK(cfg.N_c == 16);
    CHECK(cfg.P_t_mw == doctest::Approx(10.0));
    CHECK(cfg.sigma_w2_mw == doctest::Approx(0.01));
    CHECK(cfg.sigma_z2_mw == doctest::Approx(0.01));
    CHECK(cfg.delta_f_hz == doctest::Approx(156.25e3));
    CHECK(cfg.T_o_s == doctest::Approx(8e-6));
    CHECK(cfg.eta_m2.size() == 5);
    CHECK(cfg.xi_m2s2.size() == 5);
    CHECK(cfg.roundtrip_delay.size() == 5);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("structural validation failures") {
    SystemConfig cfg = SystemConfig::defaults();
    SUBCASE("no devices") { cfg.K = 0; }
    SUBCASE("single subcarrier") { cfg.N = 1; }
    SUBCASE("prefix longer than symbol") { cfg.N_c = cfg.N + 1; }
    SUBCASE("delay outside prefix") { cfg.roundtrip_delay[2] = cfg.N_c; }
    SUBCASE("threshold vector size") { cfg.eta_m2.pop_back(); }
    SUBCASE("nonpositive power") { cfg.P_t_mw = 0.0; }
    SUBCASE("nonpositive spacing") { cfg.delta_f_hz = 0.0; }
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("sensing budget at defaults matches the frozen oracle values") {
    const SystemConfig cfg = SystemConfig::defaults();
    const SensingBudget b = derive_sensing_budget(cfg);
    REQUIRE(b.rho_prime.size() == 5);
    for (int k = 0; k < 5; ++k) {
        CHECK(b.eta_prime[k] == doctest::Approx(1.0674581144170744e-4).epsilon(1e-12));
        CHECK(b.xi_prime[k] == doctest::Approx(6.672653464672489e-4).epsilon(1e-12));
        // The velocity-accuracy floor binds at the defaults.
        CHECK(b.rho_prime[k] == doctest::Approx(b.xi_prime[k]).epsilon(1e-15));
        CHECK(b.rho[k] == doctest::Approx(1.0 / b.rho_prime[k]).epsilon(1e-15));
        CHECK(b.rho_prime[k] <= cfg.P_t_mw);
    }
}

TEST_CASE("budget scaling: tighter thresholds raise the floor") {
    SystemConfig cfg = SystemConfig::defaults();
    const SensingBudget base = derive_sensing_budget(cfg);
    for (auto& x : cfg.xi_m2s2) x *= 0.25;  // four times stricter velocity accuracy
    const SensingBudget tight = derive_sensing_budget(cfg);
    CHECK(tight.xi_prime[0] == doctest::Approx(4.0 * base.xi_prime[0]).epsilon(1e-12));
}

TEST_CASE("infeasible floor names the device") {
    SystemConfig cfg = SystemConfig::defaults();
    cfg.xi_m2s2[3] = 1e-9;  // impossibly strict -> floor far above the cap
    try {
        derive_sensing_budget(cfg);
        FAIL("expected InfeasibleBudgetError");
    } catch (const InfeasibleBudgetError& e) {
        CHECK(e.device() == 3);
        CHECK(std::string(e.what()).find("device") != std::string::npos);
    }
}

TEST_CASE("thresholds_for_floor inverts the budget derivation") {
    SystemConfig cfg = SystemConfig::defaults();
    double eta = 0.0, xi = 0.0;
    thresholds_for_floor(cfg, cfg.alpha, 8.0, eta, xi);
    for (int k = 0; k < cfg.K; ++k) {
        cfg.eta_m2[k] = eta;
        cfg.xi_m2s2[k] = xi;
    }
    const SensingBudget b = derive_sensing_budget(cfg);
    for (int k = 0; k < cfg.K; ++k)
        CHECK(b.rho_prime[k] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("json text round trip preserves every field") {
    SystemConfig cfg = SystemConfig::defaults();
    cfg.K = 3;
    cfg.eta_m2 = {1.0, 2.0, 3.0};
    cfg.xi_m2s2 = {4.0, 5.0, 6.0};
    cfg.roundtrip_delay = {2, 3, 4};
    cfg.seed = 99;
    cfg.P_t_mw = dbm_to_linear(23.0);
    cfg.solver.eps_mse = 1e-8;
    const std::string text = config_to_json_text(cfg);
    const SystemConfig back = config_from_json_text(text);
    CHECK(back.K == 3);
    CHECK(back.seed == 99);
    CHECK(back.P_t_mw == doctest::Approx(cfg.P_t_mw).epsilon(1e-12));
    CHECK(back.eta_m2 == cfg.eta_m2);
    CHECK(back.xi_m2s2 == cfg.xi_m2s2);
    CHECK(back.roundtrip_delay == cfg.roundtrip_delay);
    CHECK(back.solver.eps_mse == doctest::Approx(1e-8));
    // Round trip is textually stable: serializing again gives the same line.
    CHECK(config_to_json_text(back) == text);
}

TEST_CASE("config parsing accepts dBm powers and broadcast thresholds") {
    const SystemConfig cfg = config_from_json_text(
        R"({"K": 2, "P_t_dbm": 20.0, "sigma_w2_dbm": -10.0, "eta": 2.5, "xi": 0.5,)"
        R"( "roundtrip_delay": [3, 4]})");
    CHECK(cfg.K == 2);
    CHECK(cfg.P_t_mw == doctest::Approx(100.0));
    CHECK(cfg.sigma_w2_mw == doctest::Approx(0.1));
    REQUIRE(cfg.eta_m2.size() == 2);
    CHECK(cfg.eta_m2[0] == doctest::Approx(2.5));
    CHECK(cfg.eta_m2[1] == doctest::Approx(2.5));
    CHECK(cfg.xi_m2s2[0] == doctest::Approx(0.5));
}

TEST_CASE("unknown keys are rejected") {
    CHECK_THROWS_AS(config_from_json_text(R"({"K": 2, "bogus_key": 1})"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text("not json at all"), ConfigError);
}

TEST_CASE("config file save and load") {
    const std::string path = "test_config_roundtrip.json";
    SystemConfig cfg = SystemConfig::defaults();
    cfg.seed = 1234;
    save_config(cfg, path);
    const SystemConfig back = load_config(path);
    CHECK(back.seed == 1234);
    CHECK(back.N == cfg.N);
    CHECK(config_to_json_text(back) == config_to_json_text(cfg));
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config("definitely_missing_file.json"), ConfigError);
}
