#include "isaacs/sde_sim.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "isaacs/error.hpp"
#include "isaacs/parallel.hpp"

namespace isaacs {

namespace {

constexpr double kBlowUp = 1e12;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void check_state(const Vec& x, int step, int id) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kBlowUp) {
        std::ostringstream os;
        os << "blow-up at step " << step << " (path/node " << id << ")";
        throw NumericalError(os.str());
    }
}

void check_index(int idx, int size, const char* who) {
    if (idx < 0 || idx >= size)
        throw std::out_of_range(std::string(who) + " control process returned index " +
                                std::to_string(idx) + " outside [0, " + std::to_string(size) + ")");
}

// Controls at one node honouring the information pattern.
std::pair<int, int> play(const ControlProcess& u, const ControlProcess& v, Information info,
                         ControlContext ctx, const ControlGrid& controls) {
    int ui = -1, vi = -1;
    switch (info) {
        case Information::simultaneous:
            ui = u(ctx);
            vi = v(ctx);
            break;
        case Information::v_sees_u:
            ui = u(ctx);
            ctx.opponent = ui;
            vi = v(ctx);
            break;
        case Information::u_sees_v:
            vi = v(ctx);
            ctx.opponent = vi;
            ui = u(ctx);
            break;
    }
    check_index(ui, controls.u_size(), "u");
    check_index(vi, controls.v_size(), "v");
    return {ui, vi};
}

Mat branch_increments(int d, double dt) {
    const int B = 1 << d;
    const double s = std::sqrt(dt);
    Mat inc(d, B);
    for (int b = 0; b < B; ++b)
        for (int j = 0; j < d; ++j) inc(j, b) = ((b >> j) & 1) ? s : -s;
    return inc;
}

Vec euler_step(const GameSpec& spec, double t, double dt, const Vec& x, Control u, Control v,
               const Eigen::Ref<const Vec>& dB) {
    return x + spec.eval_drift(t, x, u, v) * dt + spec.eval_diffusion(t, x, u, v) * dB;
}

PathBundle simulate_gaussian(const GameSpec& spec, const ControlGrid& controls,
                             const TimeGrid& grid, const NoiseModel& noise,
                             const InitialCondition& x0, const ControlProcess& u,
                             const ControlProcess& v, Information info) {
    if (noise.paths < 1) throw std::invalid_argument("gaussian noise needs at least one path");
    if (x0.states.size() != 1)
        throw std::invalid_argument("gaussian bundles start from a single state");
    const int n = spec.dim_state, d = spec.dim_noise, N = grid.steps, M = noise.paths;
    PathBundle out;
    out.grid = grid;
    out.kind = NoiseKind::gaussian;
    out.dim_state = n;
    out.dim_noise = d;
    out.controls = controls;
    out.layers.resize(static_cast<std::size_t>(N + 1));
    for (int k = 0; k <= N; ++k) {
        auto& L = out.layers[static_cast<std::size_t>(k)];
        L.states.resize(n, M);
        L.weights.assign(static_cast<std::size_t>(M), 1.0 / M);
        if (k < N) {
            L.increments.resize(d, M);
            L.u_index.resize(static_cast<std::size_t>(M));
            L.v_index.resize(static_cast<std::size_t>(M));
        }
    }
    const double dt = grid.dt();
    const double sdt = std::sqrt(dt);
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
        const int path = static_cast<int>(pi);
        std::mt19937_64 rng(splitmix64(noise.seed ^ splitmix64(static_cast<std::uint64_t>(path) + 1)));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> history;
        history.reserve(static_cast<std::size_t>(d * N));
        Vec x = x0.states[0];
        out.layers[0].states.col(path) = x;
        for (int k = 0; k < N; ++k) {
            auto& L = out.layers[static_cast<std::size_t>(k)];
            ControlContext ctx{k, grid.time(k), &x, std::span<const double>(history), -1};
            const auto [ui, vi] = play(u, v, info, ctx, controls);
            L.u_index[pi] = ui;
            L.v_index[pi] = vi;
            Vec dB(d);
            for (int j = 0; j < d; ++j) dB[j] = sdt * normal(rng);
            L.increments.col(path) = dB;
            x = euler_step(spec, grid.time(k), dt, x, controls.u_points[static_cast<std::size_t>(ui)],
                           controls.v_points[static_cast<std::size_t>(vi)], dB);
            check_state(x, k + 1, path);
            out.layers[static_cast<std::size_t>(k + 1)].states.col(path) = x;
            for (int j = 0; j < d; ++j) history.push_back(dB[j]);
        }
    });
    return out;
}

PathBundle simulate_lattice(const GameSpec& spec, const ControlGrid& controls,
                            const TimeGrid& grid, const NoiseModel& noise,
                            const InitialCondition& x0, const ControlProcess& u,
                            const ControlProcess& v, Information info) {
    const int n = spec.dim_state, d = spec.dim_noise, N = grid.steps;
    const int B = 1 << d;
    const int roots = static_cast<int>(x0.states.size());
    // Node budget check before allocating anything.
    double total = 0.0;
    for (int k = 0; k <= N; ++k)
        total += noise.recombine ? roots * std::pow(k + 1.0, d) : roots * std::pow(double(B), k);
    if (total > static_cast<double>(noise.node_budget)) {
        std::ostringstream os;
        os << "lattice needs " << total << " nodes, over the branch budget of " << noise.node_budget;
        throw BudgetError(os.str(), total, static_cast<double>(noise.node_budget));
    }
    const double dt = grid.dt();
    const Mat inc = branch_increments(d, dt);

    PathBundle out;
    out.grid = grid;
    out.kind = NoiseKind::binomial_lattice;
    out.dim_state = n;
    out.dim_noise = d;
    out.controls = controls;
    out.layers.resize(static_cast<std::size_t>(N + 1));

    // Per-node representative noise history.
    std::vector<std::vector<double>> hist(static_cast<std::size_t>(roots));
    {
        auto& L0 = out.layers[0];
        L0.states.resize(n, roots);
        for (int r = 0; r < roots; ++r) {
            if (x0.states[static_cast<std::size_t>(r)].size() != n)
                throw std::invalid_argument("initial state has wrong dimension");
            L0.states.col(r) = x0.states[static_cast<std::size_t>(r)];
            check_state(L0.states.col(r), 0, r);
        }
        L0.weights = x0.weights;
    }

    for (int k = 0; k < N; ++k) {
        auto& L = out.layers[static_cast<std::size_t>(k)];
        auto& next = out.layers[static_cast<std::size_t>(k + 1)];
        const int m = L.size();
        L.increments = inc;
        L.u_index.resize(static_cast<std::size_t>(m));
        L.v_index.resize(static_cast<std::size_t>(m));
        L.children.resize(static_cast<std::size_t>(m * B));

        // Child layout. Full tree: child = node*B + b. Recombining: per root, counts
        // of up-moves per dimension in mixed radix (k+2).
        int next_size = 0;
        if (noise.recombine) {
            int per_root = 1;
            for (int j = 0; j < d; ++j) per_root *= (k + 2);
            next_size = roots * per_root;
        } else {
            next_size = m * B;
        }
        next.states = Mat::Zero(n, next_size);
        next.weights.assign(static_cast<std::size_t>(next_size), 0.0);
        std::vector<char> filled(static_cast<std::size_t>(next_size), 0);
        std::vector<std::vector<double>> next_hist(static_cast<std::size_t>(next_size));

        const int per_root_k = [&] {
            int c = 1;
            for (int j = 0; j < d; ++j) c *= (k + 1);
            return c;
        }();

        for (int i = 0; i < m; ++i) {
            const Vec x = L.states.col(i);
            ControlContext ctx{k, grid.time(k), &x, std::span<const double>(hist[static_cast<std::size_t>(i)]), -1};
            const auto [ui, vi] = play(u, v, info, ctx, controls);
            L.u_index[static_cast<std::size_t>(i)] = ui;
            L.v_index[static_cast<std::size_t>(i)] = vi;
            const Control uc = controls.u_points[static_cast<std::size_t>(ui)];
            const Control vc = controls.v_points[static_cast<std::size_t>(vi)];
            const Vec b = spec.eval_drift(grid.time(k), x, uc, vc);
            const Mat s = spec.eval_diffusion(grid.time(k), x, uc, vc);
            for (int br = 0; br < B; ++br) {
                const Vec xn = x + b * dt + s * inc.col(br);
                int c = 0;
                if (noise.recombine) {
                    const int root = i / per_root_k;
                    int local = i % per_root_k;
                    int idx = 0, stride = 1;
                    for (int j = 0; j < d; ++j) {
                        const int cj = local % (k + 1) + ((br >> j) & 1);
                        local /= (k + 1);
                        idx += cj * stride;
                        stride *= (k + 2);
                    }
                    c = root * stride + idx;
                } else {
                    c = i * B + br;
                }
                L.children[static_cast<std::size_t>(i * B + br)] = c;
                next.weights[static_cast<std::size_t>(c)] += L.weights[static_cast<std::size_t>(i)] / B;
                if (!filled[static_cast<std::size_t>(c)]) {
                    check_state(xn, k + 1, c);
                    next.states.col(c) = xn;
                    filled[static_cast<std::size_t>(c)] = 1;
                    auto h = hist[static_cast<std::size_t>(i)];
                    for (int j = 0; j < d; ++j) h.push_back(inc(j, br));
                    next_hist[static_cast<std::size_t>(c)] = std::move(h);
                } else {
                    const double gap = (next.states.col(c) - xn).cwiseAbs().maxCoeff();
                    if (gap > 1e-9 * (1.0 + xn.cwiseAbs().maxCoeff())) {
                        std::ostringstream os;
                        os << "lattice does not recombine at step " << k + 1 << " (node " << c
                           << ", state gap " << gap << "); use recombine=false";
                        throw NumericalError(os.str());
                    }
                }
            }
        }
        hist = std::move(next_hist);
    }
    return out;
}

}  // namespace

void TimeGrid::validate(double horizon) const {
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be positive");
    if (!(t0 >= 0.0) || !(t1 > t0) || t1 > horizon * (1.0 + 1e-12) + 1e-15)
        throw std::invalid_argument("TimeGrid: need 0 <= t0 < t1 <= T");
}

ControlProcess constant_control(int index) {
    return [index](const ControlContext&) { return index; };
}

ControlProcess open_loop_control(std::vector<int> schedule) {
    if (schedule.empty()) throw std::invalid_argument("open_loop_control: empty schedule");
    return [s = std::move(schedule)](const ControlContext& ctx) {
        return s[std::min<std::size_t>(static_cast<std::size_t>(ctx.step), s.size() - 1)];
    };
}

Vec PathBundle::increment(int k, int node, int branch) const {
    const auto& L = layers[static_cast<std::size_t>(k)];
    return kind == NoiseKind::gaussian ? Vec(L.increments.col(node)) : Vec(L.increments.col(branch));
}

Control PathBundle::u_at(int k, int node) const {
    return controls.u_points[static_cast<std::size_t>(layers[static_cast<std::size_t>(k)].u_index[static_cast<std::size_t>(node)])];
}

Control PathBundle::v_at(int k, int node) const {
    return controls.v_points[static_cast<std::size_t>(layers[static_cast<std::size_t>(k)].v_index[static_cast<std::size_t>(node)])];
}

PathBundle simulate(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& grid,
                    const NoiseModel& noise, const InitialCondition& x0, const ControlProcess& u,
                    const ControlProcess& v, Information info) {
    spec.validate();
    controls.validate();
    grid.validate(spec.horizon);
    if (x0.states.empty() || x0.states.size() != x0.weights.size())
        throw std::invalid_argument("initial condition needs matching states and weights");
    double wsum = 0.0;
    for (double w : x0.weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("initial weights must be non-negative");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("initial weights must sum to 1");
    return noise.kind == NoiseKind::gaussian
               ? simulate_gaussian(spec, controls, grid, noise, x0, u, v, info)
               : simulate_lattice(spec, controls, grid, noise, x0, u, v, info);
}

PathBundle simulate(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& grid,
                    const NoiseModel& noise, const Vec& x0, const ControlProcess& u,
                    const ControlProcess& v, Information info) {
    return simulate(spec, controls, grid, noise, InitialCondition::point(x0), u, v, info);
}

PathBundle truncate(const PathBundle& bundle, int last_step) {
    if (last_step < 1 || last_step > bundle.steps())
        throw std::invalid_argument("truncate: last_step out of range");
    PathBundle out = bundle;
    out.layers.resize(static_cast<std::size_t>(last_step + 1));
    auto& last = out.layers.back();
    last.u_index.clear();
    last.v_index.clear();
    last.increments.resize(0, 0);
    last.children.clear();
    out.grid.t1 = bundle.grid.time(last_step);
    out.grid.steps = last_step;
    return out;
}

double weight_defect(const PathBundle& bundle) {
    double worst = 0.0;
    for (const auto& L : bundle.layers) {
        double s = 0.0;
        for (double w : L.weights) s += w;
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

MomentReport moment_check(const PathBundle& bundle, const Vec& x0, int p, int sub_horizons) {
    if (bundle.kind != NoiseKind::gaussian)
        throw std::invalid_argument("moment_check expects a gaussian bundle");
    if (p < 2 || p % 2 != 0) throw std::invalid_argument("moment_check: p must be even and >= 2");
    MomentReport rep;
    rep.p = p;
    const int N = bundle.steps();
    const int M = bundle.layers[0].size();
    // Sub-horizon step indices N, N/2, N/4, ... (only exact halvings).
    std::vector<int> ends;
    for (int e = N, s = 0; s < sub_horizons && e >= 1; ++s) {
        ends.push_back(e);
        if (e % 2 != 0) break;
        e /= 2;
    }
    std::vector<double> dev_sum(ends.size(), 0.0);
    double sup_sum = 0.0, dev_full = 0.0, dev_sq = 0.0;
    for (int path = 0; path < M; ++path) {
        double run_sup = 0.0, run_dev = 0.0;
        std::vector<double> dev_at(static_cast<std::size_t>(N + 1));
        for (int k = 0; k <= N; ++k) {
            const Vec xk = bundle.layers[static_cast<std::size_t>(k)].states.col(path);
            run_sup = std::max(run_sup, std::pow(xk.norm(), p));
            run_dev = std::max(run_dev, std::pow((xk - x0).norm(), p));
            dev_at[static_cast<std::size_t>(k)] = run_dev;
        }
        const double w = bundle.layers[0].weights[static_cast<std::size_t>(path)];
        sup_sum += w * run_sup;
        dev_full += w * run_dev;
        dev_sq += w * run_dev * run_dev;
        for (std::size_t e = 0; e < ends.size(); ++e) dev_sum[e] += w * dev_at[static_cast<std::size_t>(ends[e])];
    }
    rep.sup_moment = sup_sum;
    rep.sup_dev_moment = dev_full;
    rep.sup_dev_stderr = M > 1 ? std::sqrt(std::max(0.0, dev_sq - dev_full * dev_full) / (M - 1)) : 0.0;
    for (std::size_t e = 0; e < ends.size(); ++e) {
        rep.deltas.push_back(bundle.grid.time(ends[e]) - bundle.grid.t0);
        rep.dev_moments.push_back(dev_sum[e]);
    }
    bool positive = rep.deltas.size() >= 2;
    for (double m : rep.dev_moments) positive = positive && m > 0.0;
    if (positive) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double q = static_cast<double>(rep.deltas.size());
        for (std::size_t e = 0; e < rep.deltas.size(); ++e) {
            const double lx = std::log(rep.deltas[e]), ly = std::log(rep.dev_moments[e]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        rep.fitted_exponent = (q * sxy - sx * sy) / (q * sxx - sx * sx);
        rep.exponent_checked = true;
        rep.flagged = rep.fitted_exponent < p / 2.0 - 0.3;
    }
    return rep;
}

void write_bundle_csv(const PathBundle& bundle, std::ostream& os) {
    os << "#isaacs-lab-v1\npath,step,t";
    for (int i = 0; i < bundle.dim_state; ++i) os << ",x" << i;
    for (int j = 0; j < bundle.dim_noise; ++j) os << ",dB" << j;
    os << ",u_idx,v_idx,weight\n";
    os.precision(17);
    for (int k = 0; k <= bundle.steps(); ++k) {
        const auto& L = bundle.layers[static_cast<std::size_t>(k)];
        const bool has_next = k < bundle.steps();
        for (int i = 0; i < L.size(); ++i) {
            os << i << ',' << k << ',' << bundle.grid.time(k);
            for (int r = 0; r < bundle.dim_state; ++r) os << ',' << L.states(r, i);
            for (int j = 0; j < bundle.dim_noise; ++j) {
                os << ',';
                if (has_next && bundle.kind == NoiseKind::gaussian) os << L.increments(j, i);
            }
            os << ',' << (has_next ? L.u_index[static_cast<std::size_t>(i)] : -1) << ','
               << (has_next ? L.v_index[static_cast<std::size_t>(i)] : -1) << ','
               << L.weights[static_cast<std::size_t>(i)] << '\n';
        }
    }
}

}  // namespace isaacs
