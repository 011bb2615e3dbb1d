#include "isaacs/pde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "isaacs/dpp.hpp"
#include "isaacs/error.hpp"
#include "isaacs/parallel.hpp"

namespace isaacs {

namespace {

// Value at a multi-index that may sit one or two nodes outside the box.
double ghost_value(const StateGrid& g, const Vec& V, std::vector<int> m) {
    for (int i = 0; i < g.dim(); ++i) {
        const int nodes = g.axes()[static_cast<std::size_t>(i)].nodes;
        int& idx = m[static_cast<std::size_t>(i)];
        if (idx >= 0 && idx < nodes) continue;
        if (g.policy() == BoundaryPolicy::clamp) {
            idx = std::clamp(idx, 0, nodes - 1);
            continue;
        }
        // Linear extrapolation from the two nodes nearest the face.
        const int edge = idx < 0 ? 0 : nodes - 1;
        const int inward = idx < 0 ? 1 : nodes - 2;
        const int dist = idx < 0 ? -idx : idx - edge;
        auto a = m, b = m;
        a[static_cast<std::size_t>(i)] = edge;
        b[static_cast<std::size_t>(i)] = inward;
        const double va = ghost_value(g, V, a), vb = ghost_value(g, V, b);
        return va + dist * (va - vb);
    }
    return V[g.flat(m)];
}

struct Stencil {
    Vec p;  // central gradient
    Mat d2;  // standard diagonal second differences on the diagonal; unused off-diagonal
    Mat cross_pos;  // cross differences for a_ij >= 0
    Mat cross_neg;  // cross differences for a_ij < 0
};

Stencil differences(const StateGrid& g, const Vec& V, int node) {
    const int n = g.dim();
    const auto m = g.multi(node);
    const double v0 = V[node];
    auto at = [&](int i, int si, int j, int sj) {
        auto q = m;
        q[static_cast<std::size_t>(i)] += si;
        if (j >= 0) q[static_cast<std::size_t>(j)] += sj;
        return ghost_value(g, V, q);
    };
    Stencil s;
    s.p.resize(n);
    s.d2 = Mat::Zero(n, n);
    s.cross_pos = Mat::Zero(n, n);
    s.cross_neg = Mat::Zero(n, n);
    Vec plus(n), minus(n);
    for (int i = 0; i < n; ++i) {
        const double h = g.step(i);
        plus[i] = at(i, 1, -1, 0);
        minus[i] = at(i, -1, -1, 0);
        s.p[i] = (plus[i] - minus[i]) / (2.0 * h);
        s.d2(i, i) = (plus[i] - 2.0 * v0 + minus[i]) / (h * h);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double hh = 2.0 * g.step(i) * g.step(j);
            const double base = plus[i] + minus[i] + plus[j] + minus[j] - 2.0 * v0;
            const double pos = (at(i, 1, j, 1) + at(i, -1, j, -1) - base) / hh;
            const double neg = -(at(i, 1, j, -1) + at(i, -1, j, 1) - base) / hh;
            s.cross_pos(i, j) = s.cross_pos(j, i) = pos;
            s.cross_neg(i, j) = s.cross_neg(j, i) = neg;
        }
    return s;
}

Mat hessian_for(const Stencil& s, const Mat& a) {
    Mat X = s.d2;
    for (int i = 0; i < X.rows(); ++i)
        for (int j = 0; j < X.cols(); ++j)
            if (i != j) X(i, j) = a(i, j) >= 0.0 ? s.cross_pos(i, j) : s.cross_neg(i, j);
    return X;
}

// Stencil weights for one control pair: throws on a negative neighbour weight
// and returns the centre decay rate (weight of V_j is 1 - dt * rate).
double stencil_rate(const GameSpec& spec, const StateGrid& g, double t, const Vec& x, Control u,
                    Control v) {
    const int n = g.dim();
    const Mat sig = spec.eval_diffusion(t, x, u, v);
    const Mat a = sig * sig.transpose();
    const Vec b = spec.eval_drift(t, x, u, v);
    const double C = spec.yz_lipschitz();
    double rate = C;
    for (int i = 0; i < n; ++i) {
        const double hi = g.step(i);
        double diffusion = a(i, i) / (2.0 * hi * hi);
        for (int j = 0; j < n; ++j)
            if (j != i) diffusion -= std::abs(a(i, j)) / (2.0 * hi * g.step(j));
        if (diffusion < -1e-12 * (1.0 + std::abs(a(i, i)) / (hi * hi))) {
            std::ostringstream os;
            os << "stencil not monotone for this sigma sigma^T at x=" << x.transpose()
               << " (off-diagonal entries dominate the diagonal)";
            throw MonotonicityError(os.str());
        }
        const double transport = std::abs(b[i]) / (2.0 * hi) + C * sig.row(i).norm() / (2.0 * hi);
        if (diffusion - transport < -1e-12 * (1.0 + transport)) {
            std::ostringstream os;
            os << "monotonicity (CFL) violated: drift dominates diffusion at x=" << x.transpose()
               << ", refine grid";
            throw MonotonicityError(os.str());
        }
        rate += a(i, i) / (hi * hi);
        for (int j = i + 1; j < n; ++j) rate -= std::abs(a(i, j)) / (hi * g.step(j));
    }
    return rate;
}

}  // namespace

FdScheme FdScheme::from(const StateGrid& sgrid, const TimeGrid& tgrid) {
    FdScheme s;
    for (int i = 0; i < sgrid.dim(); ++i) s.h.push_back(sgrid.step(i));
    s.dt = tgrid.dt();
    s.policy = sgrid.policy();
    return s;
}

double max_stable_dt(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                     double t0, double t1) {
    double worst = 0.0;
    for (double t : {t0, 0.5 * (t0 + t1), t1})
        for (int j = 0; j < sgrid.size(); ++j) {
            const Vec x = sgrid.point(j);
            for (Control u : controls.u_points)
                for (Control v : controls.v_points) worst = std::max(worst, stencil_rate(spec, sgrid, t, x, u, v));
        }
    return worst > 0.0 ? 1.0 / worst : INFINITY;
}

int stable_steps(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                 double t0, double t1) {
    const double dt = max_stable_dt(spec, controls, sgrid, t0, t1);
    if (!std::isfinite(dt)) return 1;
    return std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9)));
}

ValueField solve_isaacs(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                        const TimeGrid& tgrid, ValueTag tag) {
    spec.validate();
    controls.validate();
    tgrid.validate(spec.horizon);
    if (sgrid.dim() != spec.dim_state)
        throw std::invalid_argument("solve_isaacs: state grid dimension differs from the game's");
    const double dt = tgrid.dt();

    ValueField field;
    field.tgrid = tgrid;
    field.sgrid = sgrid;
    field.tag = tag;
    field.values.assign(static_cast<std::size_t>(tgrid.steps + 1), Vec());
    Vec terminal(sgrid.size());
    for (int j = 0; j < sgrid.size(); ++j) terminal[j] = spec.eval_terminal(sgrid.point(j));
    field.values.back() = terminal;

    for (int k = tgrid.steps - 1; k >= 0; --k) {
        const Vec& next = field.values[static_cast<std::size_t>(k + 1)];
        const double t = tgrid.time(k);
        Vec cur(sgrid.size());
        parallel_for(static_cast<std::size_t>(sgrid.size()), [&](std::size_t jj) {
            const int j = static_cast<int>(jj);
            const Vec x = sgrid.point(j);
            const Stencil st = differences(sgrid, next, j);
            HamiltonianArgs args{t, x, next[j], st.p, Mat()};
            auto H = [&](int ui, int vi) {
                const Control u = controls.u_points[static_cast<std::size_t>(ui)];
                const Control v = controls.v_points[static_cast<std::size_t>(vi)];
                const double rate = stencil_rate(spec, sgrid, t, x, u, v);
                if (dt * rate > 1.0 + 1e-12) {
                    std::ostringstream os;
                    os << "monotonicity (CFL) violated, reduce dt or refine grid (dt=" << dt
                       << ", stable dt <= " << 1.0 / rate << ")";
                    throw MonotonicityError(os.str());
                }
                const Mat sig = spec.eval_diffusion(t, x, u, v);
                args.X = hessian_for(st, sig * sig.transpose());
                return hamiltonian(spec, args, u, v);
            };
            const MinimaxValue best =
                tag == ValueTag::lower
                    ? sup_inf_scan(controls.u_size(), controls.v_size(), H)
                    : inf_sup_scan(controls.v_size(), controls.u_size(), [&](int vi, int ui) { return H(ui, vi); });
            cur[j] = next[j] + dt * best.value;
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
    return field;
}

double viscosity_residual_at(const ValueField& field, const GameSpec& spec, const ControlGrid& controls,
                             const TestFunction& phi, int k, int node) {
    const double t = field.tgrid.time(k);
    const Vec x = field.sgrid.point(node);
    HamiltonianArgs args{t, x, field.slice(k)[node], phi.gradient(t, x), phi.hessian(t, x)};
    const double H = field.tag == ValueTag::lower ? lower_hamiltonian(spec, controls, args).value
                                                  : upper_hamiltonian(spec, controls, args).value;
    return phi.time_derivative(t, x) + H;
}

ProbeReport viscosity_residual_probe(const ValueField& field, const GameSpec& spec,
                                     const ControlGrid& controls, const std::vector<Polynomial>& family,
                                     const ProbeOptions& options) {
    const StateGrid& g = field.sgrid;
    const std::vector<int> window = g.window_nodes(options.window);
    if (window.empty()) throw std::invalid_argument("viscosity probe: empty window");
    double hmax = 0.0;
    for (int i = 0; i < g.dim(); ++i) hmax = std::max(hmax, g.step(i));
    ProbeReport rep;
    rep.tolerance = options.c_probe * (hmax + field.tgrid.dt());

    // A window node is on the window's edge if some axis neighbour is outside it.
    std::vector<char> edge(static_cast<std::size_t>(g.size()), 0);
    for (int j : window) {
        const auto m = g.multi(j);
        for (int i = 0; i < g.dim() && !edge[static_cast<std::size_t>(j)]; ++i)
            for (int s : {-1, 1}) {
                auto q = m;
                q[static_cast<std::size_t>(i)] += s;
                const int nodes = g.axes()[static_cast<std::size_t>(i)].nodes;
                if (q[static_cast<std::size_t>(i)] < 0 || q[static_cast<std::size_t>(i)] >= nodes ||
                    !g.in_window(g.flat(q), options.window))
                    edge[static_cast<std::size_t>(j)] = 1;
            }
    }

    rep.rows.resize(family.size() * 2);
    parallel_for(family.size(), [&](std::size_t f) {
        const Polynomial& phi = family[f];
        double best_max = -INFINITY, best_min = INFINITY;
        int kmax = -1, jmax = -1, kmin = -1, jmin = -1;
        for (int k = 0; k <= field.steps(); ++k) {
            const double t = field.tgrid.time(k);
            for (int j : window) {
                const double diff = field.slice(k)[j] - phi.value(t, g.point(j));
                if (diff > best_max) { best_max = diff; kmax = k; jmax = j; }
                if (diff < best_min) { best_min = diff; kmin = k; jmin = j; }
            }
        }
        for (int which = 0; which < 2; ++which) {
            ProbeRow row;
            row.phi_id = static_cast<int>(f);
            row.kind = which == 0 ? "sub" : "super";
            row.step = which == 0 ? kmax : kmin;
            const int node = which == 0 ? jmax : jmin;
            row.x = g.point(node);
            if (row.step == 0 || row.step == field.steps() || edge[static_cast<std::size_t>(node)]) {
                row.verdict = "skipped";
            } else {
                row.residual = viscosity_residual_at(field, spec, controls, phi, row.step, node);
                const bool ok = which == 0 ? row.residual >= -rep.tolerance : row.residual <= rep.tolerance;
                row.verdict = ok ? "pass" : "fail";
            }
            rep.rows[2 * f + static_cast<std::size_t>(which)] = row;
        }
    }, 1);
    for (const auto& r : rep.rows) {
        if (r.verdict == "skipped") {
            ++rep.skipped;
            continue;
        }
        ++rep.evaluated;
        if (r.verdict == "fail") ++rep.violations;
        if (r.kind == "sub")
            rep.worst_sub = std::min(rep.worst_sub, r.residual);
        else
            rep.worst_super = std::max(rep.worst_super, r.residual);
    }
    return rep;
}

void write_probe_csv(const ProbeReport& report, std::ostream& os) {
    os << "#isaacs-lab-v1\nphi_id,kind,step";
    const int n = report.rows.empty() ? 0 : static_cast<int>(report.rows.front().x.size());
    for (int i = 0; i < n; ++i) os << ",x" << i;
    os << ",residual,tolerance,verdict\n";
    os.precision(17);
    for (const auto& r : report.rows) {
        os << r.phi_id << ',' << r.kind << ',' << r.step;
        for (int i = 0; i < n; ++i) os << ',' << r.x[i];
        os << ',' << r.residual << ',' << report.tolerance << ',' << r.verdict << '\n';
    }
}

double field_discrepancy(const ValueField& a, const ValueField& b, double window) {
    if (a.steps() != b.steps() || a.sgrid.size() != b.sgrid.size())
        throw std::invalid_argument("field_discrepancy: fields live on different grids");
    double worst = 0.0;
    const auto nodes = a.sgrid.window_nodes(window);
    for (int k = 0; k <= a.steps(); ++k)
        for (int j : nodes) worst = std::max(worst, std::abs(a.slice(k)[j] - b.slice(k)[j]));
    return worst;
}

StateGrid refine(const StateGrid& sgrid) {
    auto axes = sgrid.axes();
    for (auto& a : axes) a.nodes = 2 * (a.nodes - 1) + 1;
    return StateGrid(axes, sgrid.policy());
}

AgreementReport cross_method_agreement(const GameSpec& spec, const ControlGrid& controls,
                                       const StateGrid& sgrid, const TimeGrid& tgrid, ValueTag tag,
                                       const AgreementOptions& options) {
    AgreementReport rep;
    const ValueField dpp = value_iteration(spec, controls, sgrid, tgrid, tag);
    const ValueField pde = solve_isaacs(spec, controls, sgrid, tgrid, tag);
    rep.base = field_discrepancy(dpp, pde, options.window);

    const StateGrid fine = refine(sgrid);
    TimeGrid tfine = tgrid;
    tfine.steps *= 4;
    const ValueField dpp_f = value_iteration(spec, controls, fine, tfine, tag);
    const ValueField pde_f = solve_isaacs(spec, controls, fine, tfine, tag);
    rep.refined = field_discrepancy(dpp_f, pde_f, options.window);

    rep.exact = std::max(rep.base, rep.refined) <= options.exact_floor;
    rep.ratio = rep.exact ? 0.0 : rep.base / std::max(rep.refined, 1e-300);
    rep.passed = rep.base <= options.tolerance && (rep.exact || rep.ratio >= options.min_ratio);
    return rep;
}

}  // namespace isaacs
