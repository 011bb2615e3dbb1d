#include "isaacs/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "isaacs/error.hpp"
#include "isaacs/test_function.hpp"

namespace isaacs {

namespace {

std::string fmt_vec(const Vec& x) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << "]";
    return os.str();
}

[[noreturn]] void coefficient_failure(const char* which, double t, const Vec& x, Control u,
                                      Control v) {
    std::ostringstream os;
    os << "coefficient evaluation failure: " << which << " non-finite at t=" << t
       << " x=" << fmt_vec(x) << " u=" << u << " v=" << v;
    throw NumericalError(os.str());
}

}  // namespace

void GameSpec::validate() const {
    if (dim_state < 1) throw std::invalid_argument("GameSpec: dim_state must be positive");
    if (dim_noise < 1) throw std::invalid_argument("GameSpec: dim_noise must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("GameSpec: horizon must be positive and finite");
    if (!drift || !diffusion || !driver || !terminal)
        throw std::invalid_argument("GameSpec: all coefficient callables must be set");
    if (!(lipschitz_const >= 0.0))
        throw std::invalid_argument("GameSpec: lipschitz_const must be non-negative");
}

Vec GameSpec::eval_drift(double t, const Vec& x, Control u, Control v) const {
    Vec b = drift(t, x, u, v);
    if (b.size() != dim_state) throw std::invalid_argument("drift returned wrong dimension");
    if (!b.allFinite()) coefficient_failure("drift", t, x, u, v);
    return b;
}

Mat GameSpec::eval_diffusion(double t, const Vec& x, Control u, Control v) const {
    Mat s = diffusion(t, x, u, v);
    if (s.rows() != dim_state || s.cols() != dim_noise)
        throw std::invalid_argument("diffusion returned wrong shape");
    if (!s.allFinite()) coefficient_failure("diffusion", t, x, u, v);
    return s;
}

double GameSpec::eval_driver(double t, const Vec& x, double y, const Vec& z, Control u,
                             Control v) const {
    const double f = driver(t, x, y, z, u, v);
    if (!std::isfinite(f)) {
        std::ostringstream os;
        os << "coefficient evaluation failure: driver non-finite at t=" << t
           << " x=" << fmt_vec(x) << " y=" << y << " z=" << fmt_vec(z) << " u=" << u
           << " v=" << v;
        throw NumericalError(os.str());
    }
    return f;
}

double GameSpec::eval_terminal(const Vec& x) const {
    const double g = terminal(x);
    if (!std::isfinite(g))
        throw NumericalError("coefficient evaluation failure: terminal non-finite at x=" +
                             fmt_vec(x));
    return g;
}

void ControlGrid::validate() const {
    if (u_points.empty() || v_points.empty())
        throw std::invalid_argument("ControlGrid: control lists must be non-empty");
    auto distinct = [](const std::vector<Control>& pts) {
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                if (pts[i] == pts[j]) return false;
        return true;
    };
    if (!distinct(u_points) || !distinct(v_points))
        throw std::invalid_argument("ControlGrid: control points must be distinct");
}

void HamiltonianArgs::validate(int dim_state) const {
    if (x.size() != dim_state || p.size() != dim_state || X.rows() != dim_state ||
        X.cols() != dim_state)
        throw std::invalid_argument("HamiltonianArgs: dimension mismatch");
    if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("HamiltonianArgs: X must be symmetric");
}

double hamiltonian(const GameSpec& spec, const HamiltonianArgs& args, Control u, Control v) {
    const Vec b = spec.eval_drift(args.t, args.x, u, v);
    const Mat s = spec.eval_diffusion(args.t, args.x, u, v);
    const double trace_term = 0.5 * ((s * s.transpose()) * args.X).trace();
    const Vec z = s.transpose() * args.p;  // p . sigma as a row, stored as a d-vector
    return trace_term + args.p.dot(b) + spec.eval_driver(args.t, args.x, args.y, z, u, v);
}

MinimaxValue lower_hamiltonian(const GameSpec& spec, const ControlGrid& grid,
                               const HamiltonianArgs& args) {
    args.validate(spec.dim_state);
    return sup_inf_scan(grid.u_size(), grid.v_size(), [&](int i, int j) {
        return hamiltonian(spec, args, grid.u_points[i], grid.v_points[j]);
    });
}

MinimaxValue upper_hamiltonian(const GameSpec& spec, const ControlGrid& grid,
                               const HamiltonianArgs& args) {
    args.validate(spec.dim_state);
    return inf_sup_scan(grid.v_size(), grid.u_size(), [&](int j, int i) {
        return hamiltonian(spec, args, grid.u_points[i], grid.v_points[j]);
    });
}

double isaacs_gap(const GameSpec& spec, const ControlGrid& grid, const HamiltonianArgs& args) {
    return upper_hamiltonian(spec, grid, args).value - lower_hamiltonian(spec, grid, args).value;
}

double local_driver_F(const GameSpec& spec, const TestFunction& phi, double s, const Vec& x,
                      double y, const Vec& z, Control u, Control v) {
    const Vec b = spec.eval_drift(s, x, u, v);
    const Mat sig = spec.eval_diffusion(s, x, u, v);
    const Vec grad = phi.gradient(s, x);
    const Mat hess = phi.hessian(s, x);
    const double generator = phi.time_derivative(s, x) +
                             0.5 * ((sig * sig.transpose()) * hess).trace() + grad.dot(b);
    const Vec zz = z + sig.transpose() * grad;
    return generator + spec.eval_driver(s, x, y + phi.value(s, x), zz, u, v);
}

MinimaxValue F1(const GameSpec& spec, const ControlGrid& grid, const TestFunction& phi,
                double s, const Vec& x, double y, const Vec& z, int u_index) {
    const Control u = grid.u_points.at(static_cast<std::size_t>(u_index));
    MinimaxValue r = sup_inf_scan(1, grid.v_size(), [&](int, int j) {
        return local_driver_F(spec, phi, s, x, y, z, u, grid.v_points[j]);
    });
    r.outer = u_index;
    return r;
}

MinimaxValue F0(const GameSpec& spec, const ControlGrid& grid, const TestFunction& phi,
                double s, const Vec& x, double y, const Vec& z) {
    return sup_inf_scan(grid.u_size(), grid.v_size(), [&](int i, int j) {
        return local_driver_F(spec, phi, s, x, y, z, grid.u_points[i], grid.v_points[j]);
    });
}

CoefficientCheck spot_check_coefficients(const GameSpec& spec, const ControlGrid& grid,
                                         int samples, double radius, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> time(0.0, spec.horizon);
    std::uniform_int_distribution<int> pick_u(0, grid.u_size() - 1);
    std::uniform_int_distribution<int> pick_v(0, grid.v_size() - 1);
    const double C = spec.lipschitz_const;
    CoefficientCheck out;
    out.samples = samples;
    for (int s = 0; s < samples; ++s) {
        const double t = time(rng);
        Vec x(spec.dim_state), xp(spec.dim_state);
        for (int i = 0; i < spec.dim_state; ++i) {
            x[i] = radius * unit(rng);
            xp[i] = x[i] + 0.1 * radius * unit(rng);
        }
        const Control u = grid.u_points[pick_u(rng)];
        const Control v = grid.v_points[pick_v(rng)];
        const double dx = (x - xp).norm();
        if (dx > 0.0) {
            const double lhs = (spec.eval_drift(t, x, u, v) - spec.eval_drift(t, xp, u, v)).norm() +
                               (spec.eval_diffusion(t, x, u, v) - spec.eval_diffusion(t, xp, u, v)).norm();
            const double ratio = C > 0.0 ? lhs / (C * dx) : (lhs > 0.0 ? INFINITY : 0.0);
            out.worst_lipschitz_ratio = std::max(out.worst_lipschitz_ratio, ratio);
        }
        const Vec zero_z = Vec::Zero(spec.dim_noise);
        const double growth = std::abs(spec.eval_driver(t, x, 0.0, zero_z, u, v)) +
                              std::abs(spec.eval_terminal(x));
        const double bound = C * (1.0 + x.norm());
        const double gratio = bound > 0.0 ? growth / bound : (growth > 0.0 ? INFINITY : 0.0);
        out.worst_growth_ratio = std::max(out.worst_growth_ratio, gratio);
    }
    const double slack = 1.0 + 1e-9;
    out.lipschitz_ok = out.worst_lipschitz_ratio <= slack;
    out.growth_ok = out.worst_growth_ratio <= slack;
    return out;
}

}  // namespace isaacs
