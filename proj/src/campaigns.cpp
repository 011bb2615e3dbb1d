#include "isaacs/campaigns.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isaacs/dpp.hpp"
#include "isaacs/error.hpp"
#include "isaacs/parallel.hpp"
#include "isaacs/sde_sim.hpp"

namespace isaacs {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Independent stream per instance so that instance i does not depend on how
// many draws earlier instances consumed.
std::mt19937_64 instance_rng(std::uint64_t seed, int i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    return std::mt19937_64(seq);
}

Vec uniform_point(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
    Vec x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = uniform(rng, lo[i], hi[i]);
    return x;
}

ControlProcess random_schedule(std::mt19937_64& rng, int steps, int size) {
    std::vector<int> s(static_cast<std::size_t>(steps));
    for (int& c : s) c = uniform_int(rng, 0, size - 1);
    return open_loop_control(std::move(s));
}

// Window steps for BSDE campaigns: a full tree with 2^d branches stays small.
int campaign_steps(const BsdeCampaignSetup& s) {
    const int d = s.game->spec.dim_noise;
    return d == 1 ? s.steps : std::max(1, std::min(s.steps, 12 / d));
}

void check_setup(const BsdeCampaignSetup& s) {
    if (!s.game) throw std::invalid_argument("campaign: game not set");
    const int n = s.game->spec.dim_state;
    if (s.x_lo.size() != n || s.x_hi.size() != n) throw std::invalid_argument("campaign: box dimension mismatch");
    if (!(s.t0 < s.t1)) throw std::invalid_argument("campaign: empty time window");
}

}  // namespace

AlignedInstance random_aligned_instance(std::mt19937_64& rng) {
    AlignedInstance out;
    const int N = uniform_int(rng, 1, 2);
    const int nu = N == 1 ? uniform_int(rng, 1, 3) : 2;
    const int nv = N == 1 ? uniform_int(rng, 1, 3) : 2;
    const double T = uniform_int(rng, 0, 1) ? 1.0 : 0.5;
    const double h = 0.25;
    const double dt = T / N;

    std::vector<int> m(static_cast<std::size_t>(nu * nv)), s(m.size());
    std::vector<double> a(m.size()), cy(m.size()), cz(m.size());
    double cmax = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = uniform_int(rng, -2, 2);
        s[i] = uniform_int(rng, 0, 2);
        a[i] = uniform(rng, -1.0, 1.0);
        cy[i] = uniform(rng, -0.25, 0.25);
        cz[i] = uniform(rng, -0.25, 0.25);
        cmax = std::max(cmax, std::abs(cy[i]) + std::abs(cz[i]));
    }
    const double e = uniform(rng, -0.5, 0.5);
    const double p0 = uniform(rng, -1.0, 1.0), p1 = uniform(rng, -1.0, 1.0), p2 = uniform(rng, -0.5, 0.5),
                 p3 = uniform(rng, -1.0, 1.0);

    auto cell = [nv](Control u, Control v) {
        return static_cast<std::size_t>(std::lround(u)) * static_cast<std::size_t>(nv) +
               static_cast<std::size_t>(std::lround(v));
    };
    GameSpec& g = out.game.spec;
    g.dim_state = 1;
    g.dim_noise = 1;
    g.horizon = T;
    g.drift = [=](double, const Vec&, Control u, Control v) {
        return Vec::Constant(1, h / dt * m[cell(u, v)]);
    };
    g.diffusion = [=](double, const Vec&, Control u, Control v) {
        return Mat::Constant(1, 1, s[cell(u, v)] * h / std::sqrt(dt));
    };
    g.driver = [=](double, const Vec& x, double y, const Vec& z, Control u, Control v) {
        const std::size_t c = cell(u, v);
        return a[c] + cy[c] * y + cz[c] * z[0] + e * std::sin(x[0]);
    };
    g.terminal = [=](const Vec& x) { return p0 + p1 * x[0] + p2 * x[0] * x[0] + p3 * std::sin(2.0 * x[0]); };
    g.driver_yz_lipschitz = cmax;
    g.lipschitz_const = std::max(1.0, cmax + std::abs(e));

    out.game.family = "aligned";
    for (int i = 0; i < nu; ++i) out.game.controls.u_points.push_back(i);
    for (int j = 0; j < nv; ++j) out.game.controls.v_points.push_back(j);

    // Every reachable state is x0 + h * integer with |integer| <= 4N.
    const int R = 4 * N + 2;
    out.sgrid = StateGrid::uniform(1, -R * h, R * h, 2 * R + 1);
    out.tgrid = TimeGrid{0.0, T, N};
    out.x0 = Vec::Constant(1, h * uniform_int(rng, -1, 1));
    return out;
}

CampaignReport dpp_bruteforce_campaign(int instances, std::uint64_t seed, double tol, double budget) {
    CampaignReport rep;
    rep.name = "dpp_bruteforce";
    rep.tolerance = tol;
    std::vector<double> gaps(static_cast<std::size_t>(instances), 0.0);
    std::vector<std::string> errors(gaps.size());
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng = instance_rng(seed, i);
        const AlignedInstance inst = random_aligned_instance(rng);
        try {
            const BruteForceResult bf = brute_force_game(inst.game.spec, inst.game.controls, inst.tgrid, inst.x0,
                                                         BruteForceOptions{budget, true, true});
            const ValueField W = value_iteration(inst.game.spec, inst.game.controls, inst.sgrid, inst.tgrid,
                                                 ValueTag::lower);
            const ValueField U = value_iteration(inst.game.spec, inst.game.controls, inst.sgrid, inst.tgrid,
                                                 ValueTag::upper);
            gaps[static_cast<std::size_t>(i)] =
                std::max(std::abs(W.root(inst.x0) - *bf.lower), std::abs(U.root(inst.x0) - *bf.upper));
        } catch (const std::exception& ex) {
            errors[static_cast<std::size_t>(i)] = ex.what();
        }
    }
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        ++rep.instances;
        if (!errors[i].empty()) {
            ++rep.failures;
            if (rep.note.empty()) rep.note = "instance " + std::to_string(i) + ": " + errors[i];
            continue;
        }
        rep.worst = std::max(rep.worst, gaps[i]);
        if (!(gaps[i] <= tol)) ++rep.failures;
    }
    return rep;
}

CampaignReport comparison_campaign(const BsdeCampaignSetup& setup, int instances, std::uint64_t seed) {
    check_setup(setup);
    const GameInstance& game = *setup.game;
    const int N = campaign_steps(setup);
    const TimeGrid grid{setup.t0, setup.t1, N};
    CampaignReport rep;
    rep.name = "comparison";
    rep.tolerance = 1e-10;
    rep.worst = INFINITY;
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng = instance_rng(seed, i);
        const Vec x0 = uniform_point(rng, setup.x_lo, setup.x_hi);
        const ControlProcess u = random_schedule(rng, N, game.controls.u_size());
        const ControlProcess v = random_schedule(rng, N, game.controls.v_size());
        const PathBundle bundle = simulate(game.spec, game.controls, grid, NoiseModel::lattice(), x0, u, v);

        const double bump = uniform(rng, 0.0, 1.0), freq = uniform(rng, 0.5, 3.0);
        const double lift = uniform(rng, 0.0, 0.5), wave = uniform(rng, 0.5, 3.0);
        const GameSpec& spec = game.spec;
        const TerminalData xi2 = TerminalData::from_function(bundle, spec.terminal);
        const TerminalData xi1 = TerminalData::from_function(bundle, [&](const Vec& x) {
            return spec.terminal(x) + bump * (1.0 + std::sin(freq * x.sum()));
        });
        const Driver g2 = game_driver(spec);
        const Driver g1 = [&, g2](const DriverPoint& p) {
            return g2(p) + lift * (1.0 + std::cos(wave * p.x.sum() + p.step));
        };
        const OracleReport r = comparison_oracle(spec, bundle, xi1, g1, xi2, g2);
        ++rep.instances;
        rep.worst = std::min(rep.worst, r.worst_margin);
        if (!r.passed) {
            ++rep.failures;
            if (rep.note.empty()) {
                std::ostringstream os;
                os << "instance " << i << ": " << r;
                rep.note = os.str();
            }
        }
    }
    return rep;
}

CampaignReport stability_campaign(const BsdeCampaignSetup& setup, int instances, std::uint64_t seed) {
    check_setup(setup);
    const GameInstance& game = *setup.game;
    const int N = campaign_steps(setup);
    const TimeGrid grid{setup.t0, setup.t1, N};
    CampaignReport rep;
    rep.name = "stability";
    rep.tolerance = 0.0;
    rep.worst = INFINITY;
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng = instance_rng(seed, i);
        const Vec x0 = uniform_point(rng, setup.x_lo, setup.x_hi);
        const ControlProcess u = random_schedule(rng, N, game.controls.u_size());
        const ControlProcess v = random_schedule(rng, N, game.controls.v_size());
        const PathBundle bundle = simulate(game.spec, game.controls, grid, NoiseModel::lattice(), x0, u, v);

        double c[8];
        for (double& ci : c) ci = uniform(rng, -1.0, 1.0);
        const GameSpec& spec = game.spec;
        const TerminalData xi1 = TerminalData::from_function(bundle, [&](const Vec& x) {
            return spec.terminal(x) + c[0] * std::sin(x.sum());
        });
        const TerminalData xi2 = TerminalData::from_function(bundle, [&](const Vec& x) {
            return spec.terminal(x) + c[1] * std::cos(2.0 * x.sum());
        });
        const Perturbation phi1 = [&](int step, int, double t, const Vec& x) {
            return c[2] * std::sin(c[3] * x.sum() + step) + c[4] * t;
        };
        const Perturbation phi2 = [&](int, int node, double, const Vec& x) {
            return c[5] * std::cos(c[6] * x.sum()) + c[7] * ((node % 3) - 1);
        };
        const OracleReport r = stability_estimate_check(spec, bundle, game_driver(spec), phi1, phi2, xi1, xi2);
        ++rep.instances;
        rep.worst = std::min(rep.worst, r.worst_margin);
        if (!r.passed) {
            ++rep.failures;
            if (rep.note.empty()) {
                std::ostringstream os;
                os << "instance " << i << ": " << r;
                rep.note = os.str();
            }
        }
    }
    return rep;
}

CampaignReport semigroup_campaign(const BsdeCampaignSetup& setup, int instances, std::uint64_t seed) {
    check_setup(setup);
    const GameInstance& game = *setup.game;
    const int N = std::max(2, campaign_steps(setup));
    const TimeGrid grid{setup.t0, setup.t1, N};
    CampaignReport rep;
    rep.name = "semigroup";
    rep.tolerance = 1e-10;
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng = instance_rng(seed, i);
        const Vec x0 = uniform_point(rng, setup.x_lo, setup.x_hi);
        const ControlProcess u = random_schedule(rng, N, game.controls.u_size());
        const ControlProcess v = random_schedule(rng, N, game.controls.v_size());
        const int split = uniform_int(rng, 1, N - 1);
        const PathBundle bundle = simulate(game.spec, game.controls, grid, NoiseModel::lattice(), x0, u, v);
        const double gap = semigroup_consistency_gap(game.spec, bundle, split);
        ++rep.instances;
        rep.worst = std::max(rep.worst, gap);
        if (!(gap <= rep.tolerance)) ++rep.failures;
    }
    return rep;
}

namespace {

// Random window inside [t0, t1] with delta from the ladder (clamped).
LocalizationInstance random_window(const BsdeCampaignSetup& setup, const std::vector<double>& deltas,
                                   int window_steps, std::mt19937_64& rng) {
    LocalizationInstance inst;
    inst.spec = &setup.game->spec;
    inst.controls = setup.game->controls;
    inst.steps = window_steps;
    double delta = deltas.empty() ? 0.1 : deltas[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(deltas.size()) - 1))];
    delta = std::min(delta, setup.t1 - setup.t0);
    inst.delta = delta;
    inst.t = setup.t0 + uniform(rng, 0.0, 1.0) * (setup.t1 - setup.t0 - delta);
    inst.x = uniform_point(rng, setup.x_lo, setup.x_hi);
    return inst;
}

}  // namespace

CampaignReport identity_campaign(const BsdeCampaignSetup& setup, const std::vector<double>& deltas,
                                 int window_steps, int instances, std::uint64_t seed) {
    check_setup(setup);
    CampaignReport rep;
    rep.name = "localization_identity";
    rep.tolerance = 1e-10;
    const int n = setup.game->spec.dim_state;
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng = instance_rng(seed, i);
        LocalizationInstance inst = random_window(setup, deltas, window_steps, rng);
        inst.phi = random_polynomial(n, 3, 1.0, rng);
        const ControlProcess u = random_schedule(rng, window_steps, inst.controls.u_size());
        const ControlProcess v = random_schedule(rng, window_steps, inst.controls.v_size());
        const IdentityReport r = localization_identity(inst, u, v);
        ++rep.instances;
        rep.worst = std::max(rep.worst, r.gap);
        if (!(r.gap <= rep.tolerance)) ++rep.failures;
    }
    return rep;
}

CampaignReport supinf_campaign(const BsdeCampaignSetup& setup, const Polynomial& phi,
                               const std::vector<double>& deltas, int window_steps, int instances,
                               std::uint64_t seed, double budget) {
    check_setup(setup);
    CampaignReport rep;
    rep.name = "supinf_ode";
    rep.tolerance = 1.0;  // worst is |enumeration - ode| / allowed
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng = instance_rng(seed, i);
        LocalizationInstance inst = random_window(setup, deltas, window_steps, rng);
        inst.phi = phi;
        ++rep.instances;
        try {
            const SupInfReport r = supinf_reduction_check(inst, false, budget);
            const double ratio = std::abs(r.enumeration - r.ode) / r.tolerance;
            rep.worst = std::max(rep.worst, ratio);
            if (!r.passed) {
                ++rep.failures;
                if (rep.note.empty()) rep.note = "instance " + std::to_string(i) + ": " + r.note;
            }
        } catch (const BudgetError& ex) {
            ++rep.failures;
            if (rep.note.empty()) rep.note = ex.what();
        }
    }
    return rep;
}

CampaignReport ode_selfcheck_campaign(const BsdeCampaignSetup& setup, const Polynomial& phi,
                                      const std::vector<double>& deltas, int window_steps,
                                      int instances, std::uint64_t seed, double tol) {
    check_setup(setup);
    CampaignReport rep;
    rep.name = "ode_selfcheck";
    rep.tolerance = tol;
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng = instance_rng(seed, i);
        LocalizationInstance inst = random_window(setup, deltas, window_steps, rng);
        inst.phi = phi;
        const OdeResult r = solve_Y0_ode(inst);
        ++rep.instances;
        rep.worst = std::max(rep.worst, r.self_check);
        if (!(r.self_check <= tol)) ++rep.failures;
    }
    return rep;
}

}  // namespace isaacs
