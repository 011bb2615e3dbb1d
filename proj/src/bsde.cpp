#include "isaacs/bsde.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "isaacs/error.hpp"
#include "isaacs/parallel.hpp"

namespace isaacs {

namespace {

// Exponent tuples of total degree <= degree in n variables.
std::vector<std::vector<int>> monomial_exponents(int n, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    while (true) {
        int total = 0;
        for (int v : e) total += v;
        if (total <= degree) out.push_back(e);
        std::size_t i = 0;
        while (i < e.size()) {
            if (++e[i] <= degree) break;
            e[i] = 0;
            ++i;
        }
        if (i == e.size()) break;
    }
    return out;
}

Mat regression_expectation(const PathBundle& bundle, int k, const Mat& next, int degree) {
    const auto& L = bundle.layers[static_cast<std::size_t>(k)];
    const int m = L.size();
    const int n = bundle.dim_state;
    const Vec mean = L.states.rowwise().mean();
    const Vec spread = (L.states.colwise() - mean).cwiseAbs().rowwise().maxCoeff();
    Eigen::Map<const Vec> w(L.weights.data(), m);
    if (spread.maxCoeff() <= 1e-14 * (1.0 + mean.cwiseAbs().maxCoeff())) {
        // All paths share the state: the conditional expectation is the mean.
        const Eigen::RowVectorXd avg = w.transpose() * next;
        return avg.replicate(m, 1);
    }
    const auto exps = monomial_exponents(n, degree);
    const int K = static_cast<int>(exps.size());
    Mat A(m, K);
    for (int i = 0; i < m; ++i) {
        for (int c = 0; c < K; ++c) {
            double v = 1.0;
            for (int r = 0; r < n; ++r) {
                const double s = spread[r] > 0.0 ? (L.states(r, i) - mean[r]) / spread[r] : 0.0;
                for (int e = 0; e < exps[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)]; ++e) v *= s;
            }
            A(i, c) = v;
        }
    }
    const Vec sw = w.cwiseSqrt();
    const Mat Aw = sw.asDiagonal() * A;
    Eigen::ColPivHouseholderQR<Mat> qr(Aw);
    if (qr.rank() < K) {
        std::ostringstream os;
        os << "degenerate basis at step " << k << ": regression matrix rank " << qr.rank() << " < "
           << K << " basis functions; reduce basis_degree";
        throw NumericalError(os.str());
    }
    const Mat coef = qr.solve(sw.asDiagonal() * next);
    return A * coef;
}

}  // namespace

Driver game_driver(const GameSpec& spec) {
    return [&spec](const DriverPoint& p) {
        return spec.eval_driver(p.t, p.x, p.y, p.z, p.u, p.v);
    };
}

Driver simple_driver(std::function<double(double t, double y, const Vec& z)> g) {
    return [g = std::move(g)](const DriverPoint& p) { return g(p.t, p.y, p.z); };
}

TerminalData TerminalData::from_function(const PathBundle& bundle,
                                         const std::function<double(const Vec&)>& fn) {
    const auto& L = bundle.layers.back();
    TerminalData out;
    out.values.resize(L.size());
    for (int i = 0; i < L.size(); ++i) out.values[i] = fn(L.states.col(i));
    return out;
}

TerminalData TerminalData::constant(const PathBundle& bundle, double c) {
    return {Vec::Constant(bundle.layers.back().size(), c)};
}

Mat conditional_expectation(const PathBundle& bundle, int k, const Mat& next_values,
                            int basis_degree) {
    const auto& L = bundle.layers[static_cast<std::size_t>(k)];
    if (bundle.kind == NoiseKind::gaussian)
        return regression_expectation(bundle, k, next_values, basis_degree);
    const int m = L.size();
    const int B = bundle.branches();
    Mat out = Mat::Zero(m, next_values.cols());
    for (int i = 0; i < m; ++i) {
        for (int b = 0; b < B; ++b) out.row(i) += next_values.row(bundle.child(k, i, b));
        out.row(i) /= B;
    }
    return out;
}

BsdeSolution solve_backward(const GameSpec& spec, const PathBundle& bundle,
                            const TerminalData& terminal, const BsdeOptions& options) {
    const int N = bundle.steps();
    const int d = bundle.dim_noise;
    if (terminal.values.size() != bundle.layers.back().size())
        throw std::invalid_argument("solve_backward: terminal data does not match the final layer");
    if (!terminal.values.allFinite())
        throw std::invalid_argument("solve_backward: terminal data must be finite");
    const Driver driver = options.driver ? options.driver : game_driver(spec);
    const double dt = bundle.grid.dt();

    BsdeSolution sol;
    sol.y.resize(static_cast<std::size_t>(N + 1));
    sol.z.resize(static_cast<std::size_t>(N + 1));
    sol.y[static_cast<std::size_t>(N)] = terminal.values;
    sol.z[static_cast<std::size_t>(N)] = Mat::Zero(d, bundle.layers.back().size());
    sol.scheme = std::string(bundle.kind == NoiseKind::gaussian ? "regression" : "lattice") +
                 (options.implicit ? "-implicit" : "-explicit");
    sol.basis_size = bundle.kind == NoiseKind::gaussian
                         ? static_cast<int>(monomial_exponents(bundle.dim_state, options.basis_degree).size())
                         : 0;

    for (int k = N - 1; k >= 0; --k) {
        const auto& L = bundle.layers[static_cast<std::size_t>(k)];
        const int m = L.size();
        const Vec& ynext = sol.y[static_cast<std::size_t>(k + 1)];
        Mat ybar_z(m, 1 + d);
        if (bundle.kind == NoiseKind::gaussian) {
            // Targets y_{k+1} and y_{k+1} dB_k.
            Mat targets(m, 1 + d);
            targets.col(0) = ynext;
            for (int j = 0; j < d; ++j)
                targets.col(1 + j) = ynext.cwiseProduct(L.increments.row(j).transpose());
            ybar_z = conditional_expectation(bundle, k, targets, options.basis_degree);
        } else {
            const int B = bundle.branches();
            for (int i = 0; i < m; ++i) {
                double ybar = 0.0;
                Vec zacc = Vec::Zero(d);
                for (int b = 0; b < B; ++b) {
                    const double yc = ynext[bundle.child(k, i, b)];
                    ybar += yc;
                    zacc += yc * L.increments.col(b);
                }
                ybar_z(i, 0) = ybar / B;
                ybar_z.row(i).tail(d) = (zacc / B).transpose();
            }
        }
        Vec yk(m);
        Mat zk(d, m);
        const double t = bundle.grid.time(k);
        parallel_for(static_cast<std::size_t>(m), [&](std::size_t ii) {
            const int i = static_cast<int>(ii);
            const Vec x = L.states.col(i);
            const double ybar = ybar_z(i, 0);
            const Vec z = ybar_z.row(i).tail(d).transpose() / dt;
            const Control u = bundle.u_at(k, i), v = bundle.v_at(k, i);
            double y = ybar + driver(DriverPoint{k, i, t, x, ybar, z, u, v}) * dt;
            if (options.implicit) {
                for (int it = 0; it < options.implicit_iterations; ++it) {
                    const double next = ybar + driver(DriverPoint{k, i, t, x, y, z, u, v}) * dt;
                    const double change = std::abs(next - y);
                    y = next;
                    if (change < options.implicit_tol) break;
                }
            }
            if (!std::isfinite(y)) {
                std::ostringstream os;
                os << "driver blow-up at step " << k << " node " << i;
                throw NumericalError(os.str());
            }
            yk[i] = y;
            zk.col(i) = z;
        });
        sol.y[static_cast<std::size_t>(k)] = std::move(yk);
        sol.z[static_cast<std::size_t>(k)] = std::move(zk);
    }
    return sol;
}

Vec semigroup_G(const GameSpec& spec, const PathBundle& bundle, const TerminalData& eta,
                const BsdeOptions& options) {
    return solve_backward(spec, bundle, eta, options).y.front();
}

double cost_J(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& grid,
              const NoiseModel& noise, const Vec& x0, const ControlProcess& u,
              const ControlProcess& v, const BsdeOptions& options, Information info) {
    const PathBundle bundle = simulate(spec, controls, grid, noise, x0, u, v, info);
    const auto terminal = TerminalData::from_function(bundle, [&](const Vec& x) { return spec.eval_terminal(x); });
    return solve_backward(spec, bundle, terminal, options).root();
}

std::ostream& operator<<(std::ostream& os, const OracleReport& r) {
    os << r.name << ": " << (r.passed ? "pass" : "FAIL") << " worst_margin=" << r.worst_margin
       << " checks=" << r.checks;
    if (r.witness_step >= 0) os << " witness=(step " << r.witness_step << ", node " << r.witness_node << ")";
    if (!r.note.empty()) os << " [" << r.note << "]";
    return os;
}

OracleReport comparison_oracle(const GameSpec& spec, const PathBundle& bundle,
                               const TerminalData& xi1, const Driver& g1,
                               const TerminalData& xi2, const Driver& g2,
                               const BsdeOptions& options) {
    OracleReport rep;
    rep.name = "comparison";
    const Vec dxi = xi1.values - xi2.values;
    if (dxi.minCoeff() < 0.0) {
        Eigen::Index at;
        dxi.minCoeff(&at);
        rep.passed = false;
        rep.note = "precondition: xi1 < xi2 at a terminal node";
        rep.witness_step = bundle.steps();
        rep.witness_node = static_cast<int>(at);
        return rep;
    }
    BsdeOptions o1 = options, o2 = options;
    o1.driver = g1;
    o2.driver = g2;
    const BsdeSolution s1 = solve_backward(spec, bundle, xi1, o1);
    const BsdeSolution s2 = solve_backward(spec, bundle, xi2, o2);

    // Driver dominance at both solutions' (y, z) points.
    const int d = bundle.dim_noise;
    for (int k = 0; k < bundle.steps(); ++k) {
        const auto& L = bundle.layers[static_cast<std::size_t>(k)];
        for (int i = 0; i < L.size(); ++i) {
            const Vec x = L.states.col(i);
            for (const BsdeSolution* s : {&s1, &s2}) {
                const Vec z = s->z[static_cast<std::size_t>(k)].col(i);
                const double y = s->y[static_cast<std::size_t>(k)][i];
                const DriverPoint p{k, i, bundle.grid.time(k), x, y, z, bundle.u_at(k, i), bundle.v_at(k, i)};
                if (g1(p) < g2(p) - 1e-14) {
                    rep.passed = false;
                    rep.note = "precondition: g1 < g2 at a node";
                    rep.witness_step = k;
                    rep.witness_node = i;
                    return rep;
                }
            }
        }
    }
    (void)d;

    rep.worst_margin = INFINITY;
    for (int k = 0; k <= bundle.steps(); ++k) {
        const Vec diff = s1.y[static_cast<std::size_t>(k)] - s2.y[static_cast<std::size_t>(k)];
        double tol = 1e-10;
        if (bundle.kind == NoiseKind::gaussian) {
            // 3 standard errors of the one-step-ahead difference.
            const Vec& nd = k < bundle.steps()
                                ? Vec(s1.y[static_cast<std::size_t>(k + 1)] - s2.y[static_cast<std::size_t>(k + 1)])
                                : diff;
            const double mean = nd.mean();
            const double var = nd.size() > 1 ? (nd.array() - mean).square().sum() / (nd.size() - 1) : 0.0;
            tol = 3.0 * std::sqrt(var / static_cast<double>(nd.size()));
        }
        for (Eigen::Index i = 0; i < diff.size(); ++i) {
            ++rep.checks;
            if (diff[i] < rep.worst_margin) {
                rep.worst_margin = diff[i];
                if (diff[i] < -tol) {
                    rep.passed = false;
                    rep.witness_step = k;
                    rep.witness_node = static_cast<int>(i);
                }
            }
        }
        if (!rep.passed) break;
    }
    return rep;
}

OracleReport stability_estimate_check(const GameSpec& spec, const PathBundle& bundle,
                                      const Driver& g, const Perturbation& phi1,
                                      const Perturbation& phi2, const TerminalData& xi1,
                                      const TerminalData& xi2, const BsdeOptions& options) {
    OracleReport rep;
    rep.name = "stability";
    const double C = spec.lipschitz_const;
    const double beta = 16.0 * (1.0 + C * C);
    const double dt = bundle.grid.dt();
    const int N = bundle.steps();

    BsdeOptions o1 = options, o2 = options;
    o1.driver = [&](const DriverPoint& p) { return g(p) + phi1(p.step, p.node, p.t, p.x); };
    o2.driver = [&](const DriverPoint& p) { return g(p) + phi2(p.step, p.node, p.t, p.x); };
    const BsdeSolution s1 = solve_backward(spec, bundle, xi1, o1);
    const BsdeSolution s2 = solve_backward(spec, bundle, xi2, o2);

    auto dphi2 = [&](int k) {
        const auto& L = bundle.layers[static_cast<std::size_t>(k)];
        Vec out(L.size());
        for (int i = 0; i < L.size(); ++i) {
            const Vec x = L.states.col(i);
            const double t = bundle.grid.time(k);
            const double dphi = phi1(k, i, t, x) - phi2(k, i, t, x);
            out[i] = dphi * dphi;
        }
        return out;
    };

    const double growth = std::exp(beta * dt);
    rep.worst_margin = INFINITY;
    auto record = [&](int k, const Vec& lhs, const Vec& rhs) {
        for (Eigen::Index i = 0; i < lhs.size(); ++i) {
            ++rep.checks;
            const double margin = rhs[i] - lhs[i];
            if (margin < rep.worst_margin) {
                rep.worst_margin = margin;
                if (margin < -1e-12 * (1.0 + rhs[i])) {
                    rep.passed = false;
                    rep.witness_step = k;
                    rep.witness_node = static_cast<int>(i);
                }
            }
        }
    };

    if (bundle.kind == NoiseKind::binomial_lattice) {
        // R_k = E_k[e^{beta(T - t_k)} dxi^2], S_k = E_k[sum_{j>=k} dt e^{beta(t_j - t_k)} dphi_j^2].
        Vec R = (xi1.values - xi2.values).array().square();
        Vec S = Vec::Zero(R.size());
        record(N, (s1.y.back() - s2.y.back()).array().square(), R + S);
        for (int k = N - 1; k >= 0; --k) {
            Mat next(R.size(), 2);
            next.col(0) = R;
            next.col(1) = S;
            const Mat ce = conditional_expectation(bundle, k, next, options.basis_degree);
            R = growth * ce.col(0);
            S = dt * dphi2(k) + growth * ce.col(1);
            const Vec lhs = (s1.y[static_cast<std::size_t>(k)] - s2.y[static_cast<std::size_t>(k)]).array().square();
            record(k, lhs, R + S);
            if (!rep.passed) break;
        }
        rep.note = "beta=" + std::to_string(beta) + ", all nodes";
    } else {
        const auto& w0 = bundle.layers.back().weights;
        Eigen::Map<const Vec> w(w0.data(), static_cast<Eigen::Index>(w0.size()));
        const double T = bundle.grid.t1 - bundle.grid.t0;
        double rhs = std::exp(beta * T) * w.dot((xi1.values - xi2.values).array().square().matrix());
        for (int k = 0; k < N; ++k) {
            const auto& wk = bundle.layers[static_cast<std::size_t>(k)].weights;
            Eigen::Map<const Vec> wkv(wk.data(), static_cast<Eigen::Index>(wk.size()));
            rhs += dt * std::exp(beta * (bundle.grid.time(k) - bundle.grid.t0)) * wkv.dot(dphi2(k));
        }
        const double lhs = std::pow(s1.root() - s2.root(), 2);
        record(0, Vec::Constant(1, lhs), Vec::Constant(1, rhs));
        rep.note = "beta=" + std::to_string(beta) + ", root only";
    }
    return rep;
}

OracleReport partition_mixing_check(const GameSpec& spec, const ControlGrid& controls,
                                    const TimeGrid& grid, const InitialCondition& partition,
                                    const ControlProcess& u, const ControlProcess& v,
                                    const BsdeOptions& options) {
    OracleReport rep;
    rep.name = "partition_mixing";
    const NoiseModel lattice = NoiseModel::lattice(false);
    const PathBundle mixed = simulate(spec, controls, grid, lattice, partition, u, v);
    auto phi = [&](const Vec& x) { return spec.eval_terminal(x); };
    const Vec mixed_roots = solve_backward(spec, mixed, TerminalData::from_function(mixed, phi), options).y.front();
    double mixture_mixed = 0.0, mixture_single = 0.0;
    rep.worst_margin = 0.0;
    for (std::size_t i = 0; i < partition.states.size(); ++i) {
        const PathBundle single = simulate(spec, controls, grid, lattice, partition.states[i], u, v);
        const double yi = solve_backward(spec, single, TerminalData::from_function(single, phi), options).root();
        const double gap = std::abs(yi - mixed_roots[static_cast<Eigen::Index>(i)]);
        ++rep.checks;
        if (gap > rep.worst_margin) {
            rep.worst_margin = gap;
            rep.witness_node = static_cast<int>(i);
        }
        mixture_single += partition.weights[i] * yi;
        mixture_mixed += partition.weights[i] * mixed_roots[static_cast<Eigen::Index>(i)];
    }
    rep.worst_margin = std::max(rep.worst_margin, std::abs(mixture_single - mixture_mixed));
    rep.passed = rep.worst_margin <= 1e-10;
    if (rep.passed) rep.witness_node = -1;
    std::ostringstream os;
    os.precision(12);
    os << "mixture=" << mixture_mixed;
    rep.note = os.str();
    return rep;
}

void write_solution_csv(const BsdeSolution& sol, std::ostream& os) {
    os << "#isaacs-lab-v1\nstep,node,y";
    const int d = sol.z.empty() ? 0 : static_cast<int>(sol.z.front().rows());
    for (int j = 0; j < d; ++j) os << ",z" << j;
    os << '\n';
    os.precision(17);
    for (std::size_t k = 0; k < sol.y.size(); ++k) {
        for (Eigen::Index i = 0; i < sol.y[k].size(); ++i) {
            os << k << ',' << i << ',' << sol.y[k][i];
            for (int j = 0; j < d; ++j) os << ',' << sol.z[k](j, i);
            os << '\n';
        }
    }
}

}  // namespace isaacs
