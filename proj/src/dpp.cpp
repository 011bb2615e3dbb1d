#include "isaacs/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "isaacs/error.hpp"
#include "isaacs/parallel.hpp"

namespace isaacs {

namespace {

Mat branch_matrix(int d, double dt) {
    const int B = 1 << d;
    const double s = std::sqrt(dt);
    Mat inc(d, B);
    for (int b = 0; b < B; ++b)
        for (int j = 0; j < d; ++j) inc(j, b) = ((b >> j) & 1) ? s : -s;
    return inc;
}

// Score matrix Q(outer, inner) of one-step values at a node.
Mat one_step_table(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                   const TimeGrid& tgrid, int k, const Vec& x, const Vec& next, ValueTag tag,
                   long* hits) {
    const bool lower = tag == ValueTag::lower;
    const int no = lower ? controls.u_size() : controls.v_size();
    const int ni = lower ? controls.v_size() : controls.u_size();
    Mat Q(no, ni);
    for (int i = 0; i < no; ++i)
        for (int j = 0; j < ni; ++j) {
            const Control u = controls.u_points[static_cast<std::size_t>(lower ? i : j)];
            const Control v = controls.v_points[static_cast<std::size_t>(lower ? j : i)];
            Q(i, j) = one_step_value(spec, sgrid, tgrid, k, x, next, u, v, hits);
        }
    return Q;
}

MinimaxValue opt_table(const Mat& Q, ValueTag tag) {
    auto at = [&](int i, int j) { return Q(i, j); };
    return tag == ValueTag::lower ? sup_inf_scan(static_cast<int>(Q.rows()), static_cast<int>(Q.cols()), at)
                                  : inf_sup_scan(static_cast<int>(Q.rows()), static_cast<int>(Q.cols()), at);
}

}  // namespace

double one_step_value(const GameSpec& spec, const StateGrid& sgrid, const TimeGrid& tgrid, int k,
                      const Vec& x, const Vec& next, Control u, Control v, long* boundary_hits) {
    const int d = spec.dim_noise;
    const int B = 1 << d;
    const double dt = tgrid.dt();
    const double t = tgrid.time(k);
    const Vec b = spec.eval_drift(t, x, u, v);
    const Mat s = spec.eval_diffusion(t, x, u, v);
    const Mat inc = branch_matrix(d, dt);
    double ybar = 0.0;
    Vec zacc = Vec::Zero(d);
    for (int c = 0; c < B; ++c) {
        const Vec xp = x + b * dt + s * inc.col(c);
        const auto st = sgrid.stencil(xp);
        if (st.outside && boundary_hits) ++*boundary_hits;
        double w = 0.0;
        for (int q = 0; q < st.count; ++q) {
            const double wt = st.weight[static_cast<std::size_t>(q)];
            if (wt != 0.0) w += wt * next[st.node[static_cast<std::size_t>(q)]];
        }
        ybar += w;
        zacc += w * inc.col(c);
    }
    ybar /= B;
    const Vec z = s.isZero(0.0) ? Vec::Zero(d).eval() : Vec(zacc / B / dt);
    return ybar + spec.eval_driver(t, x, ybar, z, u, v) * dt;
}

MinimaxValue one_step_opt(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                          const TimeGrid& tgrid, int k, const Vec& x, const Vec& next, ValueTag tag,
                          long* boundary_hits) {
    return opt_table(one_step_table(spec, controls, sgrid, tgrid, k, x, next, tag, boundary_hits), tag);
}

void check_dpp_monotonicity(const GameSpec& spec, const StateGrid& sgrid, const TimeGrid& tgrid) {
    (void)sgrid;
    const double C = spec.yz_lipschitz();
    const double dt = tgrid.dt();
    const double w = 1.0 - C * dt - C * std::sqrt(spec.dim_noise * dt);
    if (w < 0.0) {
        std::ostringstream os;
        os << "monotonicity (CFL) violated, reduce dt or refine grid (driver weight " << w << " at dt=" << dt << ")";
        throw MonotonicityError(os.str());
    }
}

ValueField value_iteration(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                           const TimeGrid& tgrid, ValueTag tag, DppDiagnostics* diagnostics) {
    Vec terminal(sgrid.size());
    for (int j = 0; j < sgrid.size(); ++j) terminal[j] = spec.eval_terminal(sgrid.point(j));
    return value_iteration(spec, controls, sgrid, tgrid, tag, terminal, diagnostics);
}

ValueField value_iteration(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                           const TimeGrid& tgrid, ValueTag tag, const Vec& terminal,
                           DppDiagnostics* diagnostics) {
    spec.validate();
    controls.validate();
    tgrid.validate(spec.horizon);
    if (sgrid.dim() != spec.dim_state)
        throw std::invalid_argument("value_iteration: state grid dimension differs from the game's");
    if (terminal.size() != sgrid.size())
        throw std::invalid_argument("value_iteration: terminal values do not match the grid");
    check_dpp_monotonicity(spec, sgrid, tgrid);

    ValueField field;
    field.tgrid = tgrid;
    field.sgrid = sgrid;
    field.tag = tag;
    field.values.assign(static_cast<std::size_t>(tgrid.steps + 1), Vec());
    field.values.back() = terminal;

    std::vector<long> hits(static_cast<std::size_t>(sgrid.size()), 0);
    for (int k = tgrid.steps - 1; k >= 0; --k) {
        const Vec& next = field.values[static_cast<std::size_t>(k + 1)];
        Vec cur(sgrid.size());
        parallel_for(static_cast<std::size_t>(sgrid.size()), [&](std::size_t j) {
            const Vec x = sgrid.point(static_cast<int>(j));
            cur[static_cast<Eigen::Index>(j)] =
                one_step_opt(spec, controls, sgrid, tgrid, k, x, next, tag, &hits[j]).value;
        });
        if (!cur.allFinite()) {
            Eigen::Index bad = 0;
            while (bad < cur.size() && std::isfinite(cur[bad])) ++bad;
            std::ostringstream os;
            os << "non-finite value at step " << k << " node " << bad;
            throw NumericalError(os.str());
        }
        field.values[static_cast<std::size_t>(k)] = std::move(cur);
    }
    if (diagnostics) {
        diagnostics->boundary_hits = 0;
        for (long h : hits) diagnostics->boundary_hits += h;
        diagnostics->evaluations = static_cast<long>(tgrid.steps) * sgrid.size() * controls.u_size() * controls.v_size();
        const double C = spec.yz_lipschitz();
        diagnostics->min_driver_weight = 1.0 - C * tgrid.dt() - C * std::sqrt(spec.dim_noise * tgrid.dt());
    }
    return field;
}

FeedbackLaw epsilon_optimal_extract(const ValueField& field, const GameSpec& spec,
                                    const ControlGrid& controls) {
    FeedbackLaw law;
    law.tag = field.tag;
    law.tgrid = field.tgrid;
    law.sgrid = field.sgrid;
    const bool lower = field.tag == ValueTag::lower;
    law.n_outer = lower ? controls.u_size() : controls.v_size();
    const int m = field.sgrid.size();
    law.outer.assign(static_cast<std::size_t>(field.steps()), std::vector<int>(static_cast<std::size_t>(m)));
    law.response.assign(static_cast<std::size_t>(field.steps()),
                        std::vector<int>(static_cast<std::size_t>(m * law.n_outer)));
    for (int k = 0; k < field.steps(); ++k) {
        const Vec& next = field.slice(k + 1);
        parallel_for(static_cast<std::size_t>(m), [&](std::size_t j) {
            const Vec x = field.sgrid.point(static_cast<int>(j));
            const Mat Q = one_step_table(spec, controls, field.sgrid, field.tgrid, k, x, next, field.tag, nullptr);
            const MinimaxValue best = opt_table(Q, field.tag);
            law.outer[static_cast<std::size_t>(k)][j] = best.outer;
            for (int i = 0; i < law.n_outer; ++i) {
                Eigen::Index arg;
                if (lower)
                    Q.row(i).minCoeff(&arg);
                else
                    Q.row(i).maxCoeff(&arg);
                law.response[static_cast<std::size_t>(k)][j * static_cast<std::size_t>(law.n_outer) + static_cast<std::size_t>(i)] =
                    static_cast<int>(arg);
            }
        });
    }
    return law;
}

ControlProcess feedback_process(const FeedbackLaw& law, Player player) {
    const bool outer = player == law.outer_player();
    return [&law, outer](const ControlContext& ctx) {
        if (ctx.step < 0 || ctx.step >= law.tgrid.steps)
            throw std::out_of_range("feedback law queried outside its time grid");
        const int node = law.sgrid.nearest(*ctx.state);
        const auto k = static_cast<std::size_t>(ctx.step);
        if (outer) return law.outer[k][static_cast<std::size_t>(node)];
        if (ctx.opponent < 0 || ctx.opponent >= law.n_outer)
            throw std::invalid_argument("feedback response needs the opponent's current control");
        return law.response[k][static_cast<std::size_t>(node * law.n_outer + ctx.opponent)];
    };
}

ReplayReport replay(const FeedbackLaw& law, const GameSpec& spec, const ControlGrid& controls,
                    const ValueField& field, const Vec& x0) {
    const ControlProcess u = feedback_process(law, Player::u);
    const ControlProcess v = feedback_process(law, Player::v);
    const Information info = law.tag == ValueTag::lower ? Information::v_sees_u : Information::u_sees_v;
    PathBundle bundle;
    try {
        bundle = simulate(spec, controls, law.tgrid, NoiseModel::lattice(true), x0, u, v, info);
    } catch (const NumericalError&) {
        // Feedback controls broke recombination: fall back to the full tree.
        bundle = simulate(spec, controls, law.tgrid, NoiseModel::lattice(false), x0, u, v, info);
    }
    const auto terminal = TerminalData::from_function(bundle, [&](const Vec& x) { return spec.eval_terminal(x); });
    ReplayReport r;
    r.replay_value = solve_backward(spec, bundle, terminal).root();
    r.field_value = field.root(x0);
    r.gap = std::abs(r.replay_value - r.field_value);
    return r;
}

RegularityReport regularity_probe(const ValueField& field, double window) {
    const StateGrid& g = field.sgrid;
    if (field.steps() < 2) throw std::invalid_argument("regularity_probe: need at least 3 time slices");
    for (const auto& a : g.axes())
        if (a.nodes < 5) throw std::invalid_argument("regularity_probe: need at least 5 nodes per dimension");

    const std::vector<int> inside = g.window_nodes(window);

    RegularityReport rep;
    for (int k = 0; k <= field.steps(); ++k) {
        const Vec& w = field.slice(k);
        for (int j : inside) {
            const auto m = g.multi(j);
            for (int i = 0; i < g.dim(); ++i) {
                if (m[static_cast<std::size_t>(i)] + 1 >= g.axes()[static_cast<std::size_t>(i)].nodes) continue;
                const int nb = j + g.stride(i);
                rep.lipschitz = std::max(rep.lipschitz, std::abs(w[nb] - w[j]) / g.step(i));
            }
        }
    }

    const double dt = field.tgrid.dt();
    std::vector<double> lx, ly;
    for (int lag = 1; lag <= field.steps() / 2; lag *= 2) {
        double worst = 0.0;
        for (int k = 0; k + lag <= field.steps(); ++k) {
            const Vec& a = field.slice(k);
            const Vec& b = field.slice(k + lag);
            for (int j : inside) worst = std::max(worst, std::abs(a[j] - b[j]) / (1.0 + g.point(j).norm()));
        }
        const double tau = lag * dt;
        rep.holder_constant = std::max(rep.holder_constant, worst / std::sqrt(tau));
        if (worst > 1e-13) {
            lx.push_back(std::log(tau));
            ly.push_back(std::log(worst));
        }
    }
    if (lx.size() >= 2) {
        const double n = static_cast<double>(lx.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        rep.holder_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        rep.holder_checked = true;
        rep.holder_ok = rep.holder_exponent >= 0.4;
    }
    return rep;
}

RefinementReport lipschitz_refinement(const std::vector<ValueField>& fields, double window) {
    RefinementReport rep;
    for (const auto& f : fields) rep.lipschitz.push_back(regularity_probe(f, window).lipschitz);
    for (std::size_t i = 1; i < rep.lipschitz.size(); ++i)
        if (rep.lipschitz[i] > 1.5 * rep.lipschitz[i - 1] + 1e-12) rep.ok = false;
    return rep;
}

}  // namespace isaacs
