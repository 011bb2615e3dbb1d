#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "isaacs/dpp.hpp"
#include "isaacs/error.hpp"
#include "isaacs/games.hpp"
#include "isaacs/pde.hpp"
#include "support.hpp"

using namespace isaacs;
using namespace testing_support;

namespace {

TimeGrid stable_grid(const GameInstance& g, const StateGrid& sg, double t1 = 1.0) {
    return TimeGrid{0, t1, stable_steps(g.spec, g.controls, sg, 0, t1)};
}

// Closed form of the heat case with Phi = x^2: x^2 + (T - t).
double heat_square(double t, double x) { return x * x + (1.0 - t); }

Polynomial heat_square_poly() {
    Polynomial p(1);
    p.add(1.0, 0, {2}).add(1.0, 0, {0}).add(-1.0, 1, {0});
    return p;
}

}  // namespace

TEST_CASE("stable_steps: pure diffusion needs dt <= h^2 / (sigma^2 + C h^2)") {
    const GameInstance g = make_game("heat", {{"terminal_power", 1.0}});
    const StateGrid sg = StateGrid::uniform(1, -1, 1, 21);
    const double h = 0.1, C = g.spec.yz_lipschitz();
    CHECK(max_stable_dt(g.spec, g.controls, sg, 0, 1) == doctest::Approx(1.0 / (1.0 / (h * h) + C)));
    const int n = stable_steps(g.spec, g.controls, sg, 0, 1);
    CHECK(1.0 / n <= max_stable_dt(g.spec, g.controls, sg, 0, 1) * (1 + 1e-12));
    CHECK(1.0 / (n - 1) > max_stable_dt(g.spec, g.controls, sg, 0, 1));
    const GameInstance c = make_game("constants");
    CHECK(stable_steps(c.spec, c.controls, sg, 0, 1) >= 1);
}

TEST_CASE("solve_isaacs: CFL violation is refused") {
    const GameInstance g = make_game("heat");
    const StateGrid sg = StateGrid::uniform(1, -1, 1, 41);
    CHECK_THROWS_WITH_AS(solve_isaacs(g.spec, g.controls, sg, TimeGrid{0, 1, 10}, ValueTag::lower),
                         doctest::Contains("monotonicity (CFL) violated"), MonotonicityError);
}

TEST_CASE("solve_isaacs: drift dominating diffusion is refused") {
    const GameSpec g = scalar_spec(constant_coeff(5.0), constant_coeff(0.1), zero_driver());
    const ControlGrid one{{0.0}, {0.0}};
    CHECK_THROWS_WITH_AS(solve_isaacs(g, one, StateGrid::uniform(1, -1, 1, 5), TimeGrid{0, 1, 1000}, ValueTag::lower),
                         doctest::Contains("drift dominates diffusion"), MonotonicityError);
}

TEST_CASE("solve_isaacs: dominated cross terms are refused") {
    const GameInstance g = make_game("heat", {{"dim", 2.0}, {"rho", 0.5}});
    const StateGrid sg({{-1, 1, 21}, {-1, 1, 3}});
    CHECK_THROWS_WITH_AS(max_stable_dt(g.spec, g.controls, sg, 0, 1), doctest::Contains("stencil not monotone"),
                         MonotonicityError);
    const StateGrid square = StateGrid::uniform(2, -1, 1, 9);
    CHECK_NOTHROW(max_stable_dt(g.spec, g.controls, square, 0, 1));
}

TEST_CASE("solve_isaacs: grid dimension must match the game") {
    const GameInstance g = make_game("heat");
    CHECK_THROWS_AS(solve_isaacs(g.spec, g.controls, StateGrid::uniform(2, -1, 1, 5), TimeGrid{0, 1, 100},
                                 ValueTag::lower),
                    std::invalid_argument);
}

TEST_CASE("solve_isaacs: linear heat data is invariant") {
    const GameInstance g = make_game("heat", {{"terminal_power", 1.0}});
    const StateGrid sg = StateGrid::uniform(1, -10, 10, 201);
    const ValueField f = solve_isaacs(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::lower);
    for (int k = 0; k <= f.steps(); ++k)
        for (int j : sg.window_nodes(0.2)) CHECK(std::abs(f.slice(k)[j] - sg.point(j)[0]) <= 1e-12);
}

TEST_CASE("solve_isaacs: squared heat data matches x^2 + (T - t)") {
    const GameInstance g = make_game("heat", {{"terminal_power", 2.0}});
    const StateGrid sg = StateGrid::uniform(1, -10, 10, 401);
    const ValueField f = solve_isaacs(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::lower);
    CHECK(std::abs(f.root(v1(0.0)) - 1.0) <= 0.02);
    for (int j : sg.window_nodes(0.2)) CHECK(std::abs(f.slice(0)[j] - heat_square(0, sg.point(j)[0])) <= 0.02);
}

TEST_CASE("solve_isaacs: bilinear game gives -4 and +4") {
    const GameInstance g = make_game("bilinear");
    const StateGrid sg = StateGrid::uniform(1, -2, 2, 41);
    const TimeGrid tg = stable_grid(g, sg);
    const ValueField w = solve_isaacs(g.spec, g.controls, sg, tg, ValueTag::lower);
    const ValueField u = solve_isaacs(g.spec, g.controls, sg, tg, ValueTag::upper);
    CHECK((w.slice(0).array() + 4.0).abs().maxCoeff() <= 1e-6);
    CHECK((u.slice(0).array() - 4.0).abs().maxCoeff() <= 1e-6);
    CHECK((w.slice(tg.steps).array() == 0.0).all());
}

TEST_CASE("solve_isaacs: extrapolation keeps linear data exact up to the faces") {
    const GameInstance g = make_game("heat", {{"terminal_power", 1.0}});
    const StateGrid sg = StateGrid::uniform(1, -1, 1, 21, BoundaryPolicy::extrapolate);
    const ValueField f = solve_isaacs(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::upper);
    for (int j = 0; j < sg.size(); ++j) CHECK(std::abs(f.slice(0)[j] - sg.point(j)[0]) <= 1e-12);
}

TEST_CASE("viscosity_residual_at: closed-form bilinear field has zero residual") {
    const GameInstance g = make_game("bilinear");
    const StateGrid sg = StateGrid::uniform(1, -2, 2, 41);
    const ValueField w = solve_isaacs(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::lower);
    Polynomial phi(1);
    phi.add(-4.0, 0, {0}).add(4.0, 1, {0});  // -4 (1 - t)
    for (int k = 1; k < w.steps(); k += 37)
        for (int j = 1; j + 1 < sg.size(); ++j)
            CHECK(std::abs(viscosity_residual_at(w, g.spec, g.controls, phi, k, j)) <= 1e-8);
}

TEST_CASE("viscosity_residual_probe: exact heat solution passes both inequalities") {
    const GameInstance g = make_game("heat", {{"terminal_power", 2.0}});
    const StateGrid sg = StateGrid::uniform(1, -10, 10, 201);
    const ValueField f = solve_isaacs(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::lower);
    const Polynomial exact = heat_square_poly();
    for (int k = 1; k < f.steps(); k += 17)
        for (int j : sg.window_nodes(0.2)) CHECK(std::abs(viscosity_residual_at(f, g.spec, g.controls, exact, k, j)) <= 1e-9);

    // exact +/- a bowl centred at (0.5, 0.6) touches the field from above/below there.
    Polynomial above = heat_square_poly(), below = heat_square_poly();
    above.add(Polynomial::bowl(0.5, v1(0.6), 0.3));
    below.add(Polynomial::bowl(0.5, v1(0.6), 0.3), -1.0);
    ProbeOptions po;
    po.window = 0.2;
    const ProbeReport r = viscosity_residual_probe(f, g.spec, g.controls, {above, below}, po);
    REQUIRE(r.rows.size() == 4);
    const ProbeRow& sub = r.rows[0];
    const ProbeRow& super = r.rows[3];
    CHECK(sub.kind == "sub");
    CHECK(super.kind == "super");
    for (const ProbeRow* row : {&sub, &super}) {
        CHECK(row->verdict == "pass");
        CHECK(std::abs(row->x[0] - 0.6) <= 1e-9);
        CHECK(std::abs(f.tgrid.time(row->step) - 0.5) <= f.tgrid.dt());
    }
    CHECK(sub.residual >= -r.tolerance);
    CHECK(super.residual <= r.tolerance);
    CHECK(r.violations == 0);
    CHECK(r.tolerance == doctest::Approx(10.0 * (0.1 + f.tgrid.dt())));
}

TEST_CASE("viscosity_residual_probe: boundary touching points are skipped") {
    const GameInstance g = make_game("heat", {{"terminal_power", 1.0}});
    const StateGrid sg = StateGrid::uniform(1, -2, 2, 21);
    const ValueField f = solve_isaacs(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::lower);
    // field - phi = -x is extremal on the window edges.
    Polynomial twice(1);
    twice.add(2.0, 0, {1});
    const ProbeReport r = viscosity_residual_probe(f, g.spec, g.controls, {twice});
    CHECK(r.skipped == 2);
    CHECK(r.evaluated == 0);
    std::ostringstream os;
    write_probe_csv(r, os);
    CHECK(os.str().rfind("#isaacs-lab-v1\nphi_id,kind,step,x0,residual,tolerance,verdict\n", 0) == 0);
}

TEST_CASE("viscosity_residual_probe: a field that is too large is caught") {
    const GameInstance g = make_game("heat", {{"terminal_power", 2.0}});
    const StateGrid sg = StateGrid::uniform(1, -10, 10, 201);
    ValueField f = solve_isaacs(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::lower);
    // Adding a time-growing error breaks the subsolution inequality.
    for (int k = 0; k <= f.steps(); ++k) f.values[static_cast<std::size_t>(k)].array() += 30.0 * (1.0 - f.tgrid.time(k));
    Polynomial phi = heat_square_poly();
    phi.add(30.0, 0, {0}).add(-30.0, 1, {0}).add(Polynomial::bowl(0.5, v1(0.0), 1.0));
    ProbeOptions po;
    po.window = 0.2;
    const ProbeReport r = viscosity_residual_probe(f, g.spec, g.controls, {phi}, po);
    CHECK(r.rows[0].verdict == "fail");
    CHECK(r.violations >= 1);
    CHECK(r.worst_sub < -r.tolerance);
}

TEST_CASE("cross_method_agreement: constants, bilinear and heat") {
    const GameInstance c = make_game("constants");
    const StateGrid sc = StateGrid::uniform(1, -1, 1, 11);
    const AgreementReport rc = cross_method_agreement(c.spec, c.controls, sc, TimeGrid{0, 1, 10}, ValueTag::lower);
    CHECK(rc.base == 0.0);
    CHECK(rc.exact);
    CHECK(rc.passed);

    const GameInstance b = make_game("bilinear");
    const StateGrid sb = StateGrid::uniform(1, -2, 2, 21);
    for (ValueTag tag : {ValueTag::lower, ValueTag::upper}) {
        const AgreementReport rb = cross_method_agreement(b.spec, b.controls, sb, stable_grid(b, sb), tag);
        CHECK(rb.base <= 1e-6);
        CHECK(rb.passed);
    }

    const GameInstance h = make_game("heat", {{"terminal_power", 2.0}});
    const StateGrid sh = StateGrid::uniform(1, -5, 5, 101);
    AgreementOptions o;
    o.window = 0.2;
    const AgreementReport rh = cross_method_agreement(h.spec, h.controls, sh, stable_grid(h, sh), ValueTag::lower, o);
    CHECK(rh.base <= 0.02);
    CHECK(rh.passed);
}

TEST_CASE("cross_method_agreement: a slow refinement fails the ratio test") {
    GameInstance g = make_game("sine_drift", {{"coupling", 1.0}});
    g.spec.terminal = [](const Vec& x) { return std::sin(2 * x[0]); };
    const StateGrid sg = StateGrid::uniform(1, -4, 4, 33);
    AgreementOptions o;
    o.min_ratio = 1e6;
    const AgreementReport r = cross_method_agreement(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::lower, o);
    CHECK_FALSE(r.exact);
    CHECK(r.ratio > 0.0);
    CHECK_FALSE(r.passed);
    o.tolerance = 0.0;
    o.min_ratio = 0.0;
    CHECK_FALSE(cross_method_agreement(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::lower, o).passed);
}

TEST_CASE("field_discrepancy and refine") {
    const StateGrid sg = StateGrid::uniform(2, -1, 1, 5);
    const StateGrid fine = refine(sg);
    CHECK(fine.axes()[0].nodes == 9);
    CHECK(fine.step(1) == doctest::Approx(sg.step(1) / 2));
    ValueField a, b;
    a.tgrid = b.tgrid = TimeGrid{0, 1, 1};
    a.sgrid = b.sgrid = sg;
    a.values.assign(2, Vec::Zero(sg.size()));
    b.values = a.values;
    b.values[1][0] = 5.0;                        // corner: outside the central window
    b.values[0][sg.flat({2, 2})] = -0.5;         // centre
    CHECK(field_discrepancy(a, b, 0.5) == 0.5);
    CHECK(field_discrepancy(a, b, 1.0) == 5.0);
    b.sgrid = fine;
    b.values.assign(2, Vec::Zero(fine.size()));
    CHECK_THROWS_AS(field_discrepancy(a, b, 0.5), std::invalid_argument);
}

TEST_CASE("property: ordered terminal data gives ordered PDE solutions") {
    std::mt19937_64 rng(21);
    const StateGrid sg = StateGrid::uniform(1, -3, 3, 31);
    for (int i = 0; i < 10; ++i) {
        const double a = uniform(rng, -1, 1), c = uniform(rng, 0, 1), w = uniform(rng, 0.5, 3);
        GameInstance g = make_game("sine_drift", {{"coupling", uniform(rng, -1, 1)}});
        g.spec.terminal = [a](const Vec& x) { return a * std::sin(3 * x[0]); };
        const TimeGrid tg = stable_grid(g, sg);
        const ValueField lo = solve_isaacs(g.spec, g.controls, sg, tg, ValueTag::lower);
        g.spec.terminal = [a, c, w](const Vec& x) { return a * std::sin(3 * x[0]) + c * std::exp(-w * x[0] * x[0]); };
        const ValueField hi = solve_isaacs(g.spec, g.controls, sg, tg, ValueTag::lower);
        for (int k = 0; k <= tg.steps; ++k) CHECK((lo.slice(k) - hi.slice(k)).maxCoeff() <= 1e-12);
    }
}

TEST_CASE("property: constants propagate exactly when f = 0") {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 5; ++i) {
        const double c = uniform(rng, -4, 4);
        GameInstance g = make_game("sine_drift");
        g.spec.terminal = [c](const Vec&) { return c; };
        const StateGrid sg = StateGrid::uniform(1, -2, 2, uniform_int(rng, 5, 25));
        const ValueField f = solve_isaacs(g.spec, g.controls, sg, stable_grid(g, sg), ValueTag::upper);
        for (int k = 0; k <= f.steps(); ++k) CHECK((f.slice(k).array() == c).all());
    }
}

TEST_CASE("property: lower PDE solution never exceeds the upper one") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 10; ++i) {
        const double m1 = uniform(rng, -1, 1), m2 = uniform(rng, -1, 1), q = uniform(rng, -2, 2);
        const GameSpec g = scalar_spec(
            [=](double, double x, Control u, Control v) { return 0.3 * (m1 * u * v + m2 * std::sin(x) * u); },
            [](double, double, Control u, Control) { return 1.0 + 0.25 * u; },
            [=](double, double x, double y, double z, Control u, Control v) {
                return q * u * v + 0.2 * y * v + 0.1 * z * u + std::cos(x);
            },
            [](double x) { return std::tanh(x); });
        const ControlGrid cg{{-1, 0, 1}, {-1, 0.5, 1}};
        const StateGrid sg = StateGrid::uniform(1, -3, 3, 31);
        const TimeGrid tg{0, 1, stable_steps(g, cg, sg, 0, 1)};
        const ValueField w = solve_isaacs(g, cg, sg, tg, ValueTag::lower);
        const ValueField u = solve_isaacs(g, cg, sg, tg, ValueTag::upper);
        for (int k = 0; k <= tg.steps; ++k) CHECK((w.slice(k) - u.slice(k)).maxCoeff() <= 1e-12);
    }
}

TEST_CASE("property: separable games give equal lower and upper PDE solutions") {
    std::mt19937_64 rng(24);
    for (int i = 0; i < 5; ++i) {
        const double b1 = uniform(rng, -1, 1), b2 = uniform(rng, -1, 1), f1 = uniform(rng, -1, 1);
        const GameSpec g = scalar_spec([=](double, double, Control u, Control v) { return b1 * u + b2 * v; },
                                       constant_coeff(1.0),
                                       [=](double, double x, double, double, Control u, Control v) {
                                           return f1 * u * std::sin(x) - v * v;
                                       },
                                       [](double x) { return std::cos(x); });
        const ControlGrid cg{{-1, 0, 1}, {-1, 0.5, 1}};
        const StateGrid sg = StateGrid::uniform(1, -3, 3, 31);
        const TimeGrid tg{0, 1, stable_steps(g, cg, sg, 0, 1)};
        const ValueField w = solve_isaacs(g, cg, sg, tg, ValueTag::lower);
        const ValueField u = solve_isaacs(g, cg, sg, tg, ValueTag::upper);
        CHECK(field_discrepancy(w, u, 1.0) <= 1e-12);
    }
}

TEST_CASE("property: closed-form errors do not grow under refinement") {
    struct Case {
        GameInstance game;
        std::function<double(double, double)> exact;
        double width;
    };
    const std::vector<Case> cases = {
        {make_game("heat", {{"terminal_power", 2.0}}), heat_square, 10.0},
        {make_game("heat", {{"terminal_power", 1.0}}), [](double, double x) { return x; }, 10.0},
        {make_game("bilinear"), [](double t, double) { return -4.0 * (1.0 - t); }, 2.0},
    };
    for (const Case& c : cases) {
        StateGrid sg = StateGrid::uniform(1, -c.width, c.width, 21);
        TimeGrid tg = stable_grid(c.game, sg);
        double prev = INFINITY;
        for (int level = 0; level < 3; ++level) {
            const ValueField f = solve_isaacs(c.game.spec, c.game.controls, sg, tg, ValueTag::lower);
            double err = 0.0;
            for (int j : sg.window_nodes(0.2)) err = std::max(err, std::abs(f.slice(0)[j] - c.exact(0, sg.point(j)[0])));
            CHECK(err <= 1.2 * prev + 1e-12);
            prev = err;
            sg = refine(sg);
            tg.steps *= 4;
        }
    }
}
