#include "isaacs/certify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "isaacs/error.hpp"
#include "isaacs/parallel.hpp"

namespace isaacs {

namespace {

struct Fit {
    double slope = 0.0;
    double intercept = 0.0;
    int points = 0;
};

Fit loglog_fit(const std::vector<double>& x, const std::vector<double>& y, double floor) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (y[i] > floor) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    Fit f;
    f.points = static_cast<int>(lx.size());
    if (lx.size() < 2) return f;
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

PathBundle window_bundle(const LocalizationInstance& inst, const ControlProcess& u, const ControlProcess& v) {
    return simulate(*inst.spec, inst.controls, inst.window(), NoiseModel::lattice(false), inst.x, u, v);
}

double pow_int(double b, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Lattice node of the current step from the observed increments.
long node_from_history(const ControlContext& ctx, int d) {
    long node = 0;
    for (int k = 0; k < ctx.step; ++k) {
        int b = 0;
        for (int j = 0; j < d; ++j)
            if (ctx.noise_history[static_cast<std::size_t>(k * d + j)] > 0.0) b |= 1 << j;
        node = (node << d) | b;
    }
    return node;
}

void decode(long index, int radix, std::vector<int>& digits) {
    for (auto& dgt : digits) {
        dgt = static_cast<int>(index % radix);
        index /= radix;
    }
}

}  // namespace

void LocalizationInstance::validate() const {
    if (!spec) throw std::invalid_argument("localization: no game");
    spec->validate();
    controls.validate();
    if (steps < 1) throw std::invalid_argument("localization: steps must be positive");
    if (!(delta > 0.0) || t < 0.0 || t + delta > spec->horizon * (1.0 + 1e-12))
        throw std::invalid_argument("localization: need 0 < delta <= T - t");
    if (x.size() != spec->dim_state || phi.dim() != spec->dim_state)
        throw std::invalid_argument("localization: dimension mismatch");
}

double solve_Y1(const LocalizationInstance& inst, const ControlProcess& u, const ControlProcess& v,
                Generator gen) {
    inst.validate();
    const GameSpec& spec = *inst.spec;
    const PathBundle bundle = window_bundle(inst, u, v);
    BsdeOptions opt;
    if (gen == Generator::analytic) {
        opt.driver = [&](const DriverPoint& p) {
            return local_driver_F(spec, inst.phi, p.t, p.x, p.y, p.z, p.u, p.v);
        };
    } else {
        // Per node: A = E_k[phi_{k+1}], Zphi = E_k[phi_{k+1} dB]/dt, phi_k.
        const int N = bundle.steps(), B = bundle.branches(), d = bundle.dim_noise;
        const double dt = bundle.grid.dt();
        std::vector<Vec> A(static_cast<std::size_t>(N)), P(static_cast<std::size_t>(N));
        std::vector<Mat> Z(static_cast<std::size_t>(N));
        for (int k = 0; k < N; ++k) {
            const auto& L = bundle.layers[static_cast<std::size_t>(k)];
            const auto& Ln = bundle.layers[static_cast<std::size_t>(k + 1)];
            const double tn = bundle.grid.time(k + 1);
            A[static_cast<std::size_t>(k)].resize(L.size());
            P[static_cast<std::size_t>(k)].resize(L.size());
            Z[static_cast<std::size_t>(k)] = Mat::Zero(d, L.size());
            for (int i = 0; i < L.size(); ++i) {
                double a = 0.0;
                for (int b = 0; b < B; ++b) {
                    const double pv = inst.phi.value(tn, Ln.states.col(bundle.child(k, i, b)));
                    a += pv;
                    Z[static_cast<std::size_t>(k)].col(i) += pv * L.increments.col(b);
                }
                A[static_cast<std::size_t>(k)][i] = a / B;
                Z[static_cast<std::size_t>(k)].col(i) /= B * dt;
                P[static_cast<std::size_t>(k)][i] = inst.phi.value(bundle.grid.time(k), L.states.col(i));
            }
        }
        opt.driver = [&spec, A, Z, P, dt](const DriverPoint& p) {
            const auto k = static_cast<std::size_t>(p.step);
            const double a = A[k][p.node];
            const Vec zz = p.z + Z[k].col(p.node);
            return (a - P[k][p.node]) / dt + spec.eval_driver(p.t, p.x, p.y + a, zz, p.u, p.v);
        };
    }
    return solve_backward(spec, bundle, TerminalData::constant(bundle, 0.0), opt).root();
}

BsdeSolution solve_Y2_full(const LocalizationInstance& inst, const ControlProcess& u, const ControlProcess& v) {
    inst.validate();
    const GameSpec& spec = *inst.spec;
    const PathBundle bundle = window_bundle(inst, u, v);
    BsdeOptions opt;
    const Vec x = inst.x;
    opt.driver = [&spec, &inst, x](const DriverPoint& p) {
        return local_driver_F(spec, inst.phi, p.t, x, p.y, p.z, p.u, p.v);
    };
    return solve_backward(spec, bundle, TerminalData::constant(bundle, 0.0), opt);
}

double solve_Y2(const LocalizationInstance& inst, const ControlProcess& u, const ControlProcess& v) {
    return solve_Y2_full(inst, u, v).root();
}

IdentityReport localization_identity(const LocalizationInstance& inst, const ControlProcess& u,
                                     const ControlProcess& v) {
    IdentityReport r;
    r.y1 = solve_Y1(inst, u, v, Generator::lattice_exact);
    const PathBundle bundle = window_bundle(inst, u, v);
    const double t1 = inst.t + inst.delta;
    const auto eta = TerminalData::from_function(bundle, [&](const Vec& x) { return inst.phi.value(t1, x); });
    r.semigroup = semigroup_G(*inst.spec, bundle, eta)[0];
    r.phi0 = inst.phi.value(inst.t, inst.x);
    r.gap = std::abs(r.y1 - (r.semigroup - r.phi0));
    return r;
}

double semigroup_consistency_gap(const GameSpec& spec, const PathBundle& bundle, int split_step,
                                 const BsdeOptions& options) {
    if (split_step < 1 || split_step > bundle.steps())
        throw std::invalid_argument("semigroup consistency: split step out of range");
    const auto phi = TerminalData::from_function(bundle, [&](const Vec& x) { return spec.eval_terminal(x); });
    const BsdeSolution full = solve_backward(spec, bundle, phi, options);
    const PathBundle head = truncate(bundle, split_step);
    const Vec roots = semigroup_G(spec, head, {full.y[static_cast<std::size_t>(split_step)]}, options);
    return (roots - full.y.front()).cwiseAbs().maxCoeff();
}

RateReport localization_rate_check(const LocalizationInstance& base, const std::vector<double>& deltas,
                         double min_slope) {
    base.validate();
    RateReport rep;
    const double room = base.spec->horizon - base.t;
    std::vector<double> ds;
    for (double d : deltas) {
        const double c = std::min(d, room);
        if (c > 0.0 && std::find(ds.begin(), ds.end(), c) == ds.end()) ds.push_back(c);
    }
    if (ds.size() < 2) throw std::invalid_argument("rate check: need at least two distinct window lengths");
    rep.rows.resize(ds.size());
    const int nu = base.controls.u_size(), nv = base.controls.v_size();
    parallel_for(ds.size(), [&](std::size_t r) {
        LocalizationInstance inst = base;
        inst.delta = ds[r];
        RateRow row;
        row.delta = ds[r];
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nv; ++j) {
                const auto u = constant_control(i), v = constant_control(j);
                const double y1 = solve_Y1(inst, u, v);
                const BsdeSolution y2 = solve_Y2_full(inst, u, v);
                row.diff12 = std::max(row.diff12, std::abs(y1 - y2.root()));
                // dt * sum_k E|Y2_k| + E|Z2_k| with the lattice weights.
                const PathBundle bundle = window_bundle(inst, u, v);
                double agg = 0.0;
                for (int k = 0; k < bundle.steps(); ++k) {
                    const auto& w = bundle.layers[static_cast<std::size_t>(k)].weights;
                    for (std::size_t n = 0; n < w.size(); ++n)
                        agg += w[n] * (std::abs(y2.y[static_cast<std::size_t>(k)][static_cast<Eigen::Index>(n)]) +
                                       y2.z[static_cast<std::size_t>(k)].col(static_cast<Eigen::Index>(n)).norm());
                }
                row.aggregate = std::max(row.aggregate, agg * bundle.grid.dt());
            }
        rep.rows[r] = row;
    }, 1);

    std::vector<double> x, y12, yagg;
    for (const auto& row : rep.rows) {
        x.push_back(row.delta);
        y12.push_back(row.diff12);
        yagg.push_back(row.aggregate);
    }
    const Fit f12 = loglog_fit(x, y12, 1e-14);
    const Fit fagg = loglog_fit(x, yagg, 1e-14);
    rep.slope12 = f12.slope;
    rep.intercept12 = f12.intercept;
    rep.slope_aggregate = fagg.slope;
    rep.vacuous = f12.points < 2;
    const bool ok12 = rep.vacuous || (rep.slope12 >= min_slope && std::isfinite(rep.intercept12));
    const bool okagg = fagg.points < 2 || rep.slope_aggregate >= min_slope;
    rep.passed = ok12 && okagg;
    if (rep.vacuous) rep.note = "vacuous instance: |Y1 - Y2| < 1e-14 for every window";
    if (fagg.points < 2) rep.note += std::string(rep.note.empty() ? "" : "; ") + "vacuous aggregate";
    return rep;
}

OdeResult integrate_backward(const std::function<double(double, double)>& rhs, double t0, double t1,
                             double y_end, const std::vector<double>& checkpoints, double tol) {
    if (!(t1 > t0)) throw std::invalid_argument("integrate_backward: need t0 < t1");
    const double span = t1 - t0;
    // dy/dtau = rhs(t1 - tau, y) with tau = t1 - s.
    auto f = [&](double tau, double y) { return rhs(t1 - tau, y); };
    auto rk4 = [&](double tau, double y, double h) {
        const double k1 = f(tau, y);
        const double k2 = f(tau + 0.5 * h, y + 0.5 * h * k1);
        const double k3 = f(tau + 0.5 * h, y + 0.5 * h * k2);
        const double k4 = f(tau + h, y + h * k3);
        return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    };
    // Checkpoints as tau values, ascending.
    std::vector<double> stops;
    for (double c : checkpoints) stops.push_back(t1 - c);
    std::sort(stops.begin(), stops.end());
    std::vector<double> at_stop(stops.size(), 0.0);

    OdeResult out;
    double tau = 0.0, y = y_end, h = span / 16.0;
    std::size_t next_stop = 0;
    while (next_stop < stops.size() && stops[next_stop] <= 1e-15 * span) at_stop[next_stop++] = y;
    int guard = 0;
    while (tau < span * (1.0 - 1e-15)) {
        if (++guard > 10000000) throw NumericalError("integration failure: too many steps");
        double target = span;
        if (next_stop < stops.size()) target = std::min(target, stops[next_stop]);
        double step = std::min(h, target - tau);
        const bool clipped = step < h;
        const double full = rk4(tau, y, step);
        const double half = rk4(tau + 0.5 * step, rk4(tau, y, 0.5 * step), 0.5 * step);
        const double err = std::abs(half - full) / 15.0;
        const double allowed = tol * step / span;
        if (!std::isfinite(full) || !std::isfinite(half))
            throw NumericalError("integration failure: non-finite right-hand side");
        if (err <= allowed) {
            tau += step;
            if (target - tau < 1e-14 * span) tau = target;
            y = half + (half - full) / 15.0;
            ++out.accepted_steps;
            while (next_stop < stops.size() && stops[next_stop] <= tau + 1e-14 * span) at_stop[next_stop++] = y;
            if (clipped) continue;
        }
        const double factor = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.2) : 5.0;
        h = step * std::clamp(factor, 0.2, 5.0);
        if (h < 1e-14 * span) throw NumericalError("integration failure: step size underflow");
    }
    out.value = y;
    // Report in the caller's checkpoint order.
    for (double c : checkpoints) {
        const double key = t1 - c;
        const auto it = std::lower_bound(stops.begin(), stops.end(), key - 1e-14 * span);
        out.grid_values.push_back(at_stop[static_cast<std::size_t>(it - stops.begin())]);
    }
    return out;
}

OdeResult solve_Y0_ode(const LocalizationInstance& inst, double tol) {
    inst.validate();
    const Vec zero = Vec::Zero(inst.spec->dim_noise);
    auto rhs = [&](double s, double y) {
        return F0(*inst.spec, inst.controls, inst.phi, s, inst.x, y, zero).value;
    };
    const TimeGrid w = inst.window();
    std::vector<double> times;
    for (int k = 0; k <= w.steps; ++k) times.push_back(w.time(k));
    OdeResult r = integrate_backward(rhs, w.t0, w.t1, 0.0, times, tol);
    // Halved step: local error ~ h^5, so tol / 32 halves the step size.
    const OdeResult fine = integrate_backward(rhs, w.t0, w.t1, 0.0, {}, tol / 32.0);
    r.self_check = std::abs(r.value - fine.value);
    return r;
}

SupInfReport supinf_reduction_check(const LocalizationInstance& inst, bool adapted, double budget) {
    inst.validate();
    const GameSpec& spec = *inst.spec;
    const int N = inst.steps, nu = inst.controls.u_size(), nv = inst.controls.v_size();
    SupInfReport rep;
    rep.candidates = pow_int(nu, N) * pow_int(nv, N);
    if (rep.candidates > budget) {
        std::ostringstream os;
        os << "sup-inf enumeration needs " << rep.candidates << " candidates, budget is " << budget;
        throw BudgetError(os.str(), rep.candidates, budget);
    }
    const long n_u = static_cast<long>(pow_int(nu, N)), n_v = static_cast<long>(pow_int(nv, N));

    std::vector<double> min_over_v(static_cast<std::size_t>(n_u));
    std::vector<double> y3(static_cast<std::size_t>(n_u));
    parallel_for(static_cast<std::size_t>(n_u), [&](std::size_t ui) {
        std::vector<int> us(static_cast<std::size_t>(N)), vs(static_cast<std::size_t>(N));
        decode(static_cast<long>(ui), nu, us);
        double lo = INFINITY;
        for (long vi = 0; vi < n_v; ++vi) {
            decode(vi, nv, vs);
            lo = std::min(lo, solve_Y2(inst, open_loop_control(us), open_loop_control(vs)));
        }
        min_over_v[ui] = lo;
        // Y3: driver F1 = min over v of F at the frozen state, u from the sequence.
        const PathBundle bundle = simulate(spec, inst.controls, inst.window(), NoiseModel::lattice(false), inst.x,
                                           open_loop_control(us), constant_control(0));
        BsdeOptions opt;
        opt.driver = [&](const DriverPoint& p) {
            const int uidx = us[static_cast<std::size_t>(p.step)];
            return F1(spec, inst.controls, inst.phi, p.t, inst.x, p.y, p.z, uidx).value;
        };
        y3[ui] = solve_backward(spec, bundle, TerminalData::constant(bundle, 0.0), opt).root();
    }, 1);
    rep.enumeration = *std::max_element(min_over_v.begin(), min_over_v.end());
    for (std::size_t i = 0; i < y3.size(); ++i) rep.y3_gap = std::max(rep.y3_gap, std::abs(y3[i] - min_over_v[i]));

    const OdeResult ode = solve_Y0_ode(inst);
    rep.ode = ode.value;
    // Euler truncation: tau_k = Y(t_k) - Y(t_{k+1}) - F0(t_k, Y(t_{k+1})) dt, amplified by (1 + L dt)^k.
    const TimeGrid w = inst.window();
    const double dt = w.dt(), L = spec.yz_lipschitz();
    const Vec zero = Vec::Zero(spec.dim_noise);
    for (int k = 0; k < N; ++k) {
        const double yk = ode.grid_values[static_cast<std::size_t>(k)];
        const double yn = ode.grid_values[static_cast<std::size_t>(k + 1)];
        const double tau = yk - yn - F0(spec, inst.controls, inst.phi, w.time(k), inst.x, yn, zero).value * dt;
        rep.truncation += std::pow(1.0 + L * dt, k) * std::abs(tau);
    }
    rep.tolerance = 1e-8 * (1.0 + std::abs(rep.ode)) + rep.truncation;

    if (adapted) {
        if (N > 2) throw std::invalid_argument("adapted enumeration supports windows of at most 2 steps");
        const int d = spec.dim_noise;
        const long nodes = (N == 1) ? 1 : 1 + (1L << d);
        const double need = pow_int(nu, static_cast<int>(nodes)) * pow_int(nv, static_cast<int>(nodes));
        if (need > budget) {
            std::ostringstream os;
            os << "adapted enumeration needs " << need << " candidates, budget is " << budget;
            throw BudgetError(os.str(), need, budget);
        }
        const long n_ua = static_cast<long>(pow_int(nu, static_cast<int>(nodes)));
        const long n_va = static_cast<long>(pow_int(nv, static_cast<int>(nodes)));
        auto slot = [d](const ControlContext& ctx) {
            return ctx.step == 0 ? 0L : 1 + node_from_history(ctx, d);
        };
        double best = -INFINITY;
        std::vector<int> ua(static_cast<std::size_t>(nodes)), va(static_cast<std::size_t>(nodes));
        for (long ui = 0; ui < n_ua; ++ui) {
            decode(ui, nu, ua);
            double lo = INFINITY;
            for (long vi = 0; vi < n_va; ++vi) {
                decode(vi, nv, va);
                const ControlProcess u = [&](const ControlContext& c) { return ua[static_cast<std::size_t>(slot(c))]; };
                const ControlProcess v = [&](const ControlContext& c) { return va[static_cast<std::size_t>(slot(c))]; };
                lo = std::min(lo, solve_Y2(inst, u, v));
            }
            best = std::max(best, lo);
        }
        rep.adapted_checked = true;
        rep.adapted_gap = std::abs(best - rep.enumeration);
    }
    const bool ok_adapted = !rep.adapted_checked || rep.adapted_gap <= 1e-12 * (1.0 + std::abs(rep.enumeration));
    rep.passed = std::abs(rep.enumeration - rep.ode) <= rep.tolerance && rep.y3_gap <= 1e-10 && ok_adapted &&
                 ode.self_check <= 1e-9;
    rep.note = "deterministic per-step control sequences; the frozen-state window with terminal 0 leaves Y2 deterministic";
    if (rep.adapted_checked) rep.note += "; node-adapted enumeration compared";
    return rep;
}

void write_certify_csv(const std::vector<CertifyRow>& rows, std::ostream& os) {
    os << "#isaacs-lab-v1\ncheck,instance,delta,lhs,bound,slope,verdict\n";
    os.precision(17);
    for (const auto& r : rows)
        os << r.check << ',' << r.instance << ',' << r.delta << ',' << r.lhs << ',' << r.bound << ','
           << r.slope << ',' << (r.pass ? "pass" : "fail") << '\n';
}

}  // namespace isaacs
