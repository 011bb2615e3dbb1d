#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "isaacs/campaigns.hpp"
#include "isaacs/certify.hpp"
#include "isaacs/error.hpp"
#include "isaacs/games.hpp"
#include "support.hpp"

using namespace isaacs;
using namespace testing_support;

namespace {

LocalizationInstance window(const GameSpec& g, ControlGrid c, Polynomial phi, double x = 0.3, double delta = 0.2,
                            int steps = 8, double t = 0.1) {
    LocalizationInstance inst;
    inst.spec = &g;
    inst.controls = std::move(c);
    inst.phi = std::move(phi);
    inst.t = t;
    inst.x = v1(x);
    inst.delta = delta;
    inst.steps = steps;
    return inst;
}

const ControlGrid pm1{{-1.0, 1.0}, {-1.0, 1.0}};

GameSpec still_game(ScalarDriver f = zero_driver()) {
    return scalar_spec(constant_coeff(0), constant_coeff(0), std::move(f));
}

}  // namespace

TEST_CASE("LocalizationInstance: validation") {
    const GameSpec g = still_game();
    LocalizationInstance inst = window(g, pm1, Polynomial::zero(1));
    CHECK_NOTHROW(inst.validate());
    inst.delta = 0.0;
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    inst.delta = 0.95;
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    inst.delta = 0.2;
    inst.steps = 0;
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    inst.steps = 4;
    inst.x = Vec::Zero(2);
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    inst.x = v1(0);
    inst.spec = nullptr;
    CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
}

TEST_CASE("solve_Y1: zero data and the time-linear test function") {
    const GameInstance g = make_game("sine_drift");
    const LocalizationInstance zero = window(g.spec, g.controls, Polynomial::zero(1));
    CHECK(solve_Y1(zero, constant_control(0), constant_control(1)) == 0.0);
    const LocalizationInstance lin = window(g.spec, g.controls, Polynomial::time_linear(1, 1.0), 0.3, 0.25);
    CHECK(solve_Y1(lin, constant_control(1), constant_control(0)) == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(solve_Y1(lin, constant_control(1), constant_control(0), Generator::lattice_exact) ==
          doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("solve_Y2: frozen dynamics equal Y1 and a constant driver integrates") {
    const GameSpec g = still_game([](double, double x, double y, double z, Control u, Control v) {
        return std::sin(x) * u + 0.3 * y - 0.2 * z + v;
    });
    std::mt19937_64 rng(31);
    const LocalizationInstance inst = window(g, pm1, random_polynomial(1, 3, 1.0, rng));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            CHECK(solve_Y2(inst, constant_control(a), constant_control(b)) ==
                  doctest::Approx(solve_Y1(inst, constant_control(a), constant_control(b))).epsilon(1e-14));

    const GameSpec uv = still_game([](double, double, double, double, Control u, Control v) { return u * v; });
    const LocalizationInstance c = window(uv, pm1, Polynomial::zero(1), 0.0, 0.3);
    CHECK(solve_Y2(c, constant_control(1), constant_control(1)) == doctest::Approx(0.3).epsilon(1e-14));
    const BsdeSolution full = solve_Y2_full(c, constant_control(1), constant_control(1));
    CHECK(full.root() == doctest::Approx(0.3).epsilon(1e-14));
    for (const auto& z : full.z) CHECK(z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("localization_identity: holds to 1e-10 on random lattice windows") {
    const GameInstance g = make_game("sine_drift", {{"coupling", 0.7}});
    std::mt19937_64 rng(32);
    for (int i = 0; i < 40; ++i) {
        const LocalizationInstance inst =
            window(g.spec, g.controls, random_polynomial(1, 3, 1.0, rng), uniform(rng, -1, 1), uniform(rng, 0.02, 0.4),
                   uniform_int(rng, 1, 8), uniform(rng, 0, 0.5));
        const IdentityReport r =
            localization_identity(inst, constant_control(uniform_int(rng, 0, 1)), constant_control(uniform_int(rng, 0, 1)));
        CHECK(r.gap <= 1e-10);
        CHECK(r.gap == doctest::Approx(std::abs(r.y1 - (r.semigroup - r.phi0))).epsilon(1e-9));
        CHECK(r.phi0 == doctest::Approx(inst.phi.value(inst.t, inst.x)));
    }
}

TEST_CASE("solve_Y1: analytic and lattice generators coincide for quadratic phi without drift") {
    const GameInstance g = make_game("heat", {{"terminal_power", 2.0}, {"sigma", 0.8}});
    const LocalizationInstance inst = window(g.spec, g.controls, Polynomial::squared_norm(1), 0.4, 0.3, 6);
    const double a = solve_Y1(inst, constant_control(0), constant_control(0), Generator::analytic);
    const double l = solve_Y1(inst, constant_control(0), constant_control(0), Generator::lattice_exact);
    CHECK(a == doctest::Approx(l).epsilon(1e-13));
    CHECK(a == doctest::Approx(0.64 * 0.3).epsilon(1e-13));
}

TEST_CASE("semigroup_consistency_gap: split roots agree") {
    const GameInstance g = make_game("sine_drift", {{"coupling", 0.5}});
    GameSpec spec = g.spec;
    spec.terminal = [](const Vec& x) { return std::cos(x[0]); };
    const PathBundle b = simulate(spec, g.controls, TimeGrid{0, 1, 6}, NoiseModel::lattice(false), v1(0.2),
                                  constant_control(1), constant_control(0));
    for (int split = 1; split <= 6; ++split) CHECK(semigroup_consistency_gap(spec, b, split) <= 1e-12);
    CHECK_THROWS_AS(semigroup_consistency_gap(spec, b, 0), std::invalid_argument);
    CHECK_THROWS_AS(semigroup_consistency_gap(spec, b, 7), std::invalid_argument);
}

TEST_CASE("localization_rate_check: frozen coefficients are vacuous") {
    const GameInstance g = make_game("heat", {{"terminal_power", 2.0}});
    const LocalizationInstance inst = window(g.spec, g.controls, Polynomial::squared_norm(1), 0.3, 0.2, 8, 0.0);
    const RateReport r = localization_rate_check(inst, {0.2, 0.1, 0.05, 0.025});
    CHECK(r.vacuous);
    CHECK(r.note.find("vacuous instance") != std::string::npos);
    for (const RateRow& row : r.rows) CHECK(row.diff12 < 1e-14);
}

TEST_CASE("localization_rate_check: state-dependent coefficients give slope >= 1.4") {
    const GameInstance g = make_game("sine_drift");
    const LocalizationInstance inst = window(g.spec, g.controls, Polynomial::squared_norm(1), 0.5, 0.2, 8, 0.0);
    const RateReport r = localization_rate_check(inst, {0.2, 0.1, 0.05, 0.025});
    CHECK_FALSE(r.vacuous);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.slope12 >= 1.4);
    CHECK(r.slope_aggregate >= 1.4);
    CHECK(std::isfinite(r.intercept12));
    CHECK(r.passed);
    for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i].diff12 < r.rows[i - 1].diff12);
}

TEST_CASE("localization_rate_check: deltas are clamped to the horizon") {
    const GameInstance g = make_game("sine_drift");
    const LocalizationInstance inst = window(g.spec, g.controls, Polynomial::squared_norm(1), 0.5, 0.1, 4, 0.9);
    const RateReport r = localization_rate_check(inst, {0.4, 0.2, 0.05});
    REQUIRE(!r.rows.empty());
    for (const RateRow& row : r.rows) CHECK(row.delta <= 0.1 + 1e-12);
    CHECK_THROWS_AS(localization_rate_check(inst, {0.4, 0.3}), std::invalid_argument);
}

TEST_CASE("solve_Y0_ode: constant, bilinear and linear closed forms") {
    const GameSpec c = still_game([](double, double, double, double, Control, Control) { return 1.7; });
    const OdeResult rc = solve_Y0_ode(window(c, pm1, Polynomial::zero(1), 0.0, 0.3));
    CHECK(rc.value == doctest::Approx(1.7 * 0.3).epsilon(1e-12));
    CHECK(rc.grid_values.size() == 9);
    CHECK(rc.grid_values.back() == 0.0);
    CHECK(rc.grid_values.front() == doctest::Approx(rc.value));

    const GameInstance b = make_game("bilinear");
    const OdeResult rb = solve_Y0_ode(window(b.spec, b.controls, Polynomial::zero(1), 0.0, 0.25));
    CHECK(rb.value == doctest::Approx(-1.0).epsilon(1e-12));

    const OdeResult rl = integrate_backward([](double, double y) { return 1.0 - y; }, 0, 1, 0.0, {0.5}, 1e-10);
    CHECK(std::abs(rl.value - (1.0 - std::exp(-1.0))) <= 1e-10);
    CHECK(std::abs(rl.grid_values[0] - (1.0 - std::exp(-0.5))) <= 1e-10);
    CHECK(rl.accepted_steps >= 1);

    const GameSpec lin = still_game([](double, double, double y, double, Control, Control) { return 1.0 - y; });
    const OdeResult r = solve_Y0_ode(window(lin, pm1, Polynomial::zero(1), 0.0, 0.9, 8, 0.1));
    CHECK(std::abs(r.value - (1.0 - std::exp(-0.9))) <= 1e-10);
    CHECK(r.self_check <= 1e-9);
}

TEST_CASE("integrate_backward: errors") {
    CHECK_THROWS_AS(integrate_backward([](double, double) { return 0.0; }, 1, 1, 0, {}, 1e-10),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate_backward([](double, double) { return std::nan(""); }, 0, 1, 0, {}, 1e-10),
                    NumericalError);
    CHECK_THROWS_WITH_AS(integrate_backward([](double, double y) { return y * y; }, 0, 2, 1.0, {}, 1e-10),
                         doctest::Contains("integration failure"), NumericalError);
}

TEST_CASE("property: ODE step-doubling self-check within 1e-9") {
    const GameInstance g = make_game("sine_drift", {{"coupling", 1.0}});
    std::mt19937_64 rng(33);
    for (int i = 0; i < 20; ++i) {
        const LocalizationInstance inst =
            window(g.spec, g.controls, random_polynomial(1, 3, 1.0, rng), uniform(rng, -1, 1), uniform(rng, 0.05, 0.5));
        CHECK(solve_Y0_ode(inst).self_check <= 1e-9);
    }
}

TEST_CASE("supinf_reduction_check: single-point controls") {
    const GameInstance g = make_game("sine_drift", {{"coupling", 1.0}});
    const LocalizationInstance inst =
        window(g.spec, ControlGrid{{0.5}, {-0.5}}, Polynomial::squared_norm(1), 0.2, 0.2, 3);
    const SupInfReport r = supinf_reduction_check(inst);
    CHECK(r.passed);
    CHECK(r.candidates == 1.0);
    CHECK(std::abs(r.enumeration - solve_Y2(inst, constant_control(0), constant_control(0))) <= 1e-14);
    CHECK(std::abs(r.enumeration - r.ode) <= r.tolerance);
    CHECK(r.y3_gap <= 1e-12);
}

TEST_CASE("supinf_reduction_check: constant-in-y driver is exact") {
    const GameInstance b = make_game("bilinear");
    const LocalizationInstance inst = window(b.spec, b.controls, Polynomial::zero(1), 0.0, 0.2, 3);
    const SupInfReport r = supinf_reduction_check(inst);
    CHECK(r.passed);
    CHECK(std::abs(r.enumeration + 0.8) <= 1e-10);
    CHECK(std::abs(r.ode + 0.8) <= 1e-10);
    CHECK(r.candidates == 64.0);
    CHECK_FALSE(r.adapted_checked);
}

TEST_CASE("supinf_reduction_check: f = -y + uv agrees within the truncation bound") {
    const GameSpec g = still_game([](double, double, double y, double, Control u, Control v) { return -y + u * v; });
    g.validate();
    const LocalizationInstance inst = window(g, pm1, Polynomial::zero(1), 0.0, 0.5, 2);
    const SupInfReport r = supinf_reduction_check(inst, true);
    CHECK(r.passed);
    CHECK(r.truncation > 0.0);
    CHECK(std::abs(r.enumeration - r.ode) <= r.tolerance);
    CHECK(r.adapted_checked);
    CHECK(r.adapted_gap <= 1e-12);
    CHECK(r.y3_gap <= 1e-12);
    // sup-inf of uv is -1, so -Y' = -Y - 1 with Y(t + delta) = 0 gives Y(t) = e^{-delta} - 1.
    CHECK(std::abs(r.ode - (std::exp(-0.5) - 1.0)) <= 1e-9);
}

TEST_CASE("supinf_reduction_check: budget refusal and adapted limit") {
    const ControlGrid big{{-1, -0.5, 0, 0.5, 1}, {-1, -0.5, 0, 0.5, 1}};
    const GameInstance b = make_game("bilinear");
    const LocalizationInstance inst = window(b.spec, big, Polynomial::zero(1), 0.0, 0.2, 6);
    CHECK_THROWS_AS(supinf_reduction_check(inst, false, 1e6), BudgetError);
    LocalizationInstance three = window(b.spec, b.controls, Polynomial::zero(1), 0.0, 0.2, 3);
    CHECK_THROWS_WITH_AS(supinf_reduction_check(three, true), doctest::Contains("at most 2 steps"),
                         std::invalid_argument);
    three.steps = 2;
    CHECK(supinf_reduction_check(three, true).adapted_checked);
}

TEST_CASE("write_certify_csv: header and verdicts") {
    std::ostringstream os;
    write_certify_csv({{"identity", 3, 0.1, 1e-12, 1e-10, 0.0, true}, {"rate", 0, 0.2, 0.5, 1.4, 1.2, false}}, os);
    CHECK(os.str() ==
          "#isaacs-lab-v1\ncheck,instance,delta,lhs,bound,slope,verdict\n"
          "identity,3,0.10000000000000001,9.9999999999999998e-13,1e-10,0,pass\n"
          "rate,0,0.20000000000000001,0.5,1.3999999999999999,1.2,fail\n");
}

TEST_CASE("campaigns: identity, sup-inf and ODE self-check") {
    const GameInstance g = make_game("sine_drift", {{"coupling", 1.0}});
    BsdeCampaignSetup setup;
    setup.game = &g;
    setup.t0 = 0.0;
    setup.t1 = 1.0;
    setup.x_lo = v1(-1);
    setup.x_hi = v1(1);
    const std::vector<double> deltas{0.2, 0.1, 0.05};
    const CampaignReport id = identity_campaign(setup, deltas, 4, 20, 5);
    CHECK(id.passed());
    CHECK(id.worst <= 1e-10);
    const CampaignReport si = supinf_campaign(setup, Polynomial::squared_norm(1), deltas, 3, 10, 5);
    CHECK(si.passed());
    const CampaignReport od = ode_selfcheck_campaign(setup, Polynomial::squared_norm(1), deltas, 3, 10, 5);
    CHECK(od.passed());
    CHECK(od.worst <= 1e-9);
    const CampaignReport again = identity_campaign(setup, deltas, 4, 20, 5);
    CHECK(again.worst == id.worst);
}
