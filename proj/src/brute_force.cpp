#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "isaacs/dpp.hpp"
#include "isaacs/error.hpp"
#include "isaacs/parallel.hpp"

namespace isaacs {

namespace {

long ipow(long base, int e) {
    long r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

// The discrete game on the non-recombining binomial tree. One player (the
// "process" player) plays an adapted control per tree node; the other (the
// "strategy" player) answers by a table keyed on (node, process history).
struct Tree {
    const GameSpec& spec;
    const ControlGrid& controls;
    TimeGrid tgrid;
    Vec x0;
    int N = 0;
    int d = 1;
    int B = 2;
    double dt = 0.0;
    Mat inc;
    Player strategist = Player::v;
    int np = 0;  // process player's control count
    int ns = 0;  // strategist's control count
    std::vector<long> proc_off;   // per level
    std::vector<long> strat_off;  // per level
    long proc_entries = 0;
    long strat_entries = 0;

    Tree(const GameSpec& s, const ControlGrid& c, const TimeGrid& g, const Vec& x, Player strat)
        : spec(s), controls(c), tgrid(g), x0(x), N(g.steps), d(s.dim_noise), B(1 << s.dim_noise),
          dt(g.dt()), strategist(strat) {
        inc.resize(d, B);
        const double sq = std::sqrt(dt);
        for (int b = 0; b < B; ++b)
            for (int j = 0; j < d; ++j) inc(j, b) = ((b >> j) & 1) ? sq : -sq;
        np = strat == Player::v ? c.u_size() : c.v_size();
        ns = strat == Player::v ? c.v_size() : c.u_size();
        for (int k = 0; k < N; ++k) {
            proc_off.push_back(proc_entries);
            strat_off.push_back(strat_entries);
            proc_entries += ipow(B, k);
            strat_entries += ipow(B, k) * ipow(np, k + 1);
        }
    }

    // Backward Euler value of the subtree at (k, node) with state x and process
    // history code h (process indices along the path, oldest first).
    double value(const int* proc, const int* strat, int k, long node, const Vec& x, long h) const {
        if (k == N) return spec.eval_terminal(x);
        const int p = proc[proc_off[static_cast<std::size_t>(k)] + node];
        const long hk = h * np + p;
        const int s = strat[strat_off[static_cast<std::size_t>(k)] + node * ipow(np, k + 1) + hk];
        const int ui = strategist == Player::v ? p : s;
        const int vi = strategist == Player::v ? s : p;
        const Control u = controls.u_points[static_cast<std::size_t>(ui)];
        const Control v = controls.v_points[static_cast<std::size_t>(vi)];
        const double t = tgrid.time(k);
        const Vec b = spec.eval_drift(t, x, u, v);
        const Mat sg = spec.eval_diffusion(t, x, u, v);
        double ybar = 0.0;
        Vec zacc = Vec::Zero(d);
        for (int c = 0; c < B; ++c) {
            const Vec xn = x + b * dt + sg * inc.col(c);
            const double y = value(proc, strat, k + 1, node * B + c, xn, hk);
            ybar += y;
            zacc += y * inc.col(c);
        }
        ybar /= B;
        const Vec z = zacc / B / dt;
        return ybar + spec.eval_driver(t, x, ybar, z, u, v) * dt;
    }

    double candidates() const {
        return std::pow(double(ns), double(strat_entries)) * std::pow(double(np), double(proc_entries));
    }
};

void decode(long index, int radix, std::vector<int>& digits) {
    for (auto& dgt : digits) {
        dgt = static_cast<int>(index % radix);
        index /= radix;
    }
}

// min over strategies of max over processes (strategist v), or max over
// strategies of min over processes (strategist u).
std::pair<double, std::vector<int>> solve_side(const Tree& tree) {
    const long n_strat = ipow(tree.ns, static_cast<int>(tree.strat_entries));
    const long n_proc = ipow(tree.np, static_cast<int>(tree.proc_entries));
    const bool minimise = tree.strategist == Player::v;
    std::vector<double> inner(static_cast<std::size_t>(n_strat));
    parallel_for(static_cast<std::size_t>(n_strat), [&](std::size_t si) {
        std::vector<int> strat(static_cast<std::size_t>(tree.strat_entries));
        std::vector<int> proc(static_cast<std::size_t>(tree.proc_entries));
        decode(static_cast<long>(si), tree.ns, strat);
        double best = minimise ? -INFINITY : INFINITY;
        for (long pi = 0; pi < n_proc; ++pi) {
            decode(pi, tree.np, proc);
            const double y = tree.value(proc.data(), strat.data(), 0, 0, tree.x0, 0);
            best = minimise ? std::max(best, y) : std::min(best, y);
        }
        inner[si] = best;
    }, 16);
    long arg = 0;
    for (long si = 1; si < n_strat; ++si) {
        const double v = inner[static_cast<std::size_t>(si)];
        if (minimise ? v < inner[static_cast<std::size_t>(arg)] : v > inner[static_cast<std::size_t>(arg)]) arg = si;
    }
    std::vector<int> strat(static_cast<std::size_t>(tree.strat_entries));
    decode(arg, tree.ns, strat);
    return {inner[static_cast<std::size_t>(arg)], strat};
}

StrategyTable make_table(const Tree& tree, const std::vector<int>& strat) {
    StrategyTable t;
    t.owner = tree.strategist;
    t.steps = tree.N;
    t.branches = tree.B;
    t.opponent_size = tree.np;
    for (int k = 0; k < tree.N; ++k) {
        const long off = tree.strat_off[static_cast<std::size_t>(k)];
        const long len = ipow(tree.B, k) * ipow(tree.np, k + 1);
        t.entries.emplace_back(strat.begin() + off, strat.begin() + off + len);
    }
    return t;
}

void check_tiny(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& tgrid, const Vec& x0) {
    spec.validate();
    controls.validate();
    tgrid.validate(spec.horizon);
    if (x0.size() != spec.dim_state) throw std::invalid_argument("initial state has wrong dimension");
}

}  // namespace

int StrategyTable::lookup(int k, int node, const std::vector<int>& history) const {
    if (k < 0 || k >= steps) throw std::out_of_range("StrategyTable: step out of range");
    if (static_cast<int>(history.size()) != k + 1)
        throw std::invalid_argument("StrategyTable: history must hold the opponent's controls at steps 0..k");
    long code = 0;
    for (int h : history) code = code * opponent_size + h;
    return entries[static_cast<std::size_t>(k)][static_cast<std::size_t>(node * ipow(opponent_size, k + 1) + code)];
}

double brute_force_candidates(const ControlGrid& controls, int steps, int dim_noise, ValueTag tag) {
    const double B = std::pow(2.0, dim_noise);
    const double np = tag == ValueTag::lower ? controls.u_size() : controls.v_size();
    const double ns = tag == ValueTag::lower ? controls.v_size() : controls.u_size();
    double proc = 0.0, strat = 0.0;
    for (int k = 0; k < steps; ++k) {
        proc += std::pow(B, k);
        strat += std::pow(B, k) * std::pow(np, k + 1);
    }
    return std::pow(ns, strat) * std::pow(np, proc);
}

BruteForceResult brute_force_game(const GameSpec& spec, const ControlGrid& controls,
                                  const TimeGrid& tgrid, const Vec& x0, const BruteForceOptions& options) {
    check_tiny(spec, controls, tgrid, x0);
    BruteForceResult out;
    out.lower_candidates = brute_force_candidates(controls, tgrid.steps, spec.dim_noise, ValueTag::lower);
    out.upper_candidates = brute_force_candidates(controls, tgrid.steps, spec.dim_noise, ValueTag::upper);
    auto refuse = [&](const char* side, double need) {
        std::ostringstream os;
        os << "brute force " << side << " value needs " << need << " candidates, budget is " << options.budget;
        throw BudgetError(os.str(), need, options.budget);
    };
    if (options.lower && out.lower_candidates > options.budget) refuse("lower", out.lower_candidates);
    if (options.upper && out.upper_candidates > options.budget) refuse("upper", out.upper_candidates);
    if (options.lower) {
        const Tree tree(spec, controls, tgrid, x0, Player::v);
        auto [value, strat] = solve_side(tree);
        out.lower = value;
        out.lower_strategy = make_table(tree, strat);
    }
    if (options.upper) {
        const Tree tree(spec, controls, tgrid, x0, Player::u);
        auto [value, strat] = solve_side(tree);
        out.upper = value;
        out.upper_strategy = make_table(tree, strat);
    }
    return out;
}

double best_response_value(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& tgrid,
                           const Vec& x0, const ControlProcess& fixed, Player player, double budget) {
    check_tiny(spec, controls, tgrid, x0);
    const int d = spec.dim_noise, B = 1 << d, N = tgrid.steps;
    const int nopp = player == Player::u ? controls.v_size() : controls.u_size();
    const double need = std::pow(double(nopp) * B, N);
    if (need > budget) {
        std::ostringstream os;
        os << "best response tree needs " << need << " nodes, budget is " << budget;
        throw BudgetError(os.str(), need, budget);
    }
    const double dt = tgrid.dt(), sq = std::sqrt(dt);
    Mat inc(d, B);
    for (int b = 0; b < B; ++b)
        for (int j = 0; j < d; ++j) inc(j, b) = ((b >> j) & 1) ? sq : -sq;
    // The fixed player's payoff is y; the opponent minimises it when the fixed player is u.
    const bool minimise = player == Player::u;

    std::function<double(int, const Vec&, std::vector<double>&)> rec =
        [&](int k, const Vec& x, std::vector<double>& hist) -> double {
        if (k == N) return spec.eval_terminal(x);
        const double t = tgrid.time(k);
        ControlContext ctx{k, t, &x, std::span<const double>(hist), -1};
        const int fi = fixed(ctx);
        const int nfix = player == Player::u ? controls.u_size() : controls.v_size();
        if (fi < 0 || fi >= nfix) throw std::out_of_range("fixed control process returned an invalid index");
        double best = minimise ? INFINITY : -INFINITY;
        for (int o = 0; o < nopp; ++o) {
            const int ui = player == Player::u ? fi : o;
            const int vi = player == Player::u ? o : fi;
            const Control u = controls.u_points[static_cast<std::size_t>(ui)];
            const Control v = controls.v_points[static_cast<std::size_t>(vi)];
            const Vec b = spec.eval_drift(t, x, u, v);
            const Mat s = spec.eval_diffusion(t, x, u, v);
            double ybar = 0.0;
            Vec zacc = Vec::Zero(d);
            for (int c = 0; c < B; ++c) {
                for (int j = 0; j < d; ++j) hist.push_back(inc(j, c));
                const double y = rec(k + 1, x + b * dt + s * inc.col(c), hist);
                hist.resize(hist.size() - static_cast<std::size_t>(d));
                ybar += y;
                zacc += y * inc.col(c);
            }
            ybar /= B;
            const Vec z = zacc / B / dt;
            const double y = ybar + spec.eval_driver(t, x, ybar, z, u, v) * dt;
            best = minimise ? std::min(best, y) : std::max(best, y);
        }
        return best;
    };
    std::vector<double> hist;
    return rec(0, x0, hist);
}

ExpectationReport expectation_formulation_check(const GameSpec& spec, const ControlGrid& controls,
                                                const TimeGrid& tgrid, const Vec& x0, double budget) {
    BruteForceOptions opt;
    opt.budget = budget;
    opt.upper = false;
    const BruteForceResult bf = brute_force_game(spec, controls, tgrid, x0, opt);

    // Re-enumerate min_beta max_u with J evaluated by simulate + solve_backward.
    const int d = spec.dim_noise, B = 1 << d, N = tgrid.steps;
    const int nu = controls.u_size(), nv = controls.v_size();
    std::vector<long> uoff, boff;
    long ucount = 0, bcount = 0;
    for (int k = 0; k < N; ++k) {
        uoff.push_back(ucount);
        boff.push_back(bcount);
        ucount += ipow(B, k);
        bcount += ipow(B, k) * ipow(nu, k + 1);
    }
    const long n_beta = ipow(nv, static_cast<int>(bcount));
    const long n_u = ipow(nu, static_cast<int>(ucount));

    // Tree node at step k from the observed lattice increments.
    auto node_of = [d, B](const ControlContext& ctx) {
        long node = 0;
        for (int k = 0; k < ctx.step; ++k) {
            int b = 0;
            for (int j = 0; j < d; ++j)
                if (ctx.noise_history[static_cast<std::size_t>(k * d + j)] > 0.0) b |= 1 << j;
            node = node * B + b;
        }
        return node;
    };

    auto phi = [&](const Vec& x) { return spec.eval_terminal(x); };
    std::vector<double> inner(static_cast<std::size_t>(n_beta));
    parallel_for(static_cast<std::size_t>(n_beta), [&](std::size_t bi) {
        std::vector<int> beta(static_cast<std::size_t>(bcount)), ua(static_cast<std::size_t>(ucount));
        decode(static_cast<long>(bi), nv, beta);
        double worst = -INFINITY;
        for (long ui = 0; ui < n_u; ++ui) {
            decode(ui, nu, ua);
            const ControlProcess u = [&](const ControlContext& ctx) {
                return ua[static_cast<std::size_t>(uoff[static_cast<std::size_t>(ctx.step)] + node_of(ctx))];
            };
            const ControlProcess v = [&](const ControlContext& ctx) {
                const long node = node_of(ctx);
                long code = 0;
                for (int j = 0; j < ctx.step; ++j) {
                    const long anc = node / ipow(B, ctx.step - j);
                    code = code * nu + ua[static_cast<std::size_t>(uoff[static_cast<std::size_t>(j)] + anc)];
                }
                code = code * nu + ctx.opponent;
                return beta[static_cast<std::size_t>(boff[static_cast<std::size_t>(ctx.step)] +
                                                     node * ipow(nu, ctx.step + 1) + code)];
            };
            const PathBundle bundle = simulate(spec, controls, tgrid, NoiseModel::lattice(false), x0, u, v,
                                               Information::v_sees_u);
            worst = std::max(worst, solve_backward(spec, bundle, TerminalData::from_function(bundle, phi)).root());
        }
        inner[bi] = worst;
    }, 16);

    ExpectationReport rep;
    rep.brute_force = *bf.lower;
    rep.expectation = *std::min_element(inner.begin(), inner.end());
    rep.gap = std::abs(rep.expectation - rep.brute_force);
    rep.passed = rep.gap <= 1e-12 * (1.0 + std::abs(rep.brute_force));
    return rep;
}

}  // namespace isaacs
