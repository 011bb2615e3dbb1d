#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace isaacs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point of one player's control set. Control sets are finite grids of
/// scalar points; coefficient callables receive the point value itself.
using Control = double;

class TestFunction;

/// Coefficient bundle of a zero-sum game with BSDE payoff:
///   dX = b(t,X,u,v) dt + sigma(t,X,u,v) dB,
///   -dY = f(t,X,Y,Z,u,v) dt - Z dB,  Y_T = Phi(X_T).
struct GameSpec {
    using DriftFn = std::function<Vec(double t, const Vec& x, Control u, Control v)>;
    using DiffusionFn = std::function<Mat(double t, const Vec& x, Control u, Control v)>;
    using DriverFn = std::function<double(double t, const Vec& x, double y, const Vec& z,
                                          Control u, Control v)>;
    using TerminalFn = std::function<double(const Vec& x)>;

    int dim_state = 1;
    int dim_noise = 1;
    double horizon = 1.0;
    DriftFn drift;
    DiffusionFn diffusion;
    DriverFn driver;
    TerminalFn terminal;

    /// Declared joint Lipschitz constant C (b, sigma in x; f in (x,y,z); Phi in x),
    /// also the linear-growth constant of f(.,.,0,0,.,.) and Phi.
    double lipschitz_const = 1.0;

    /// Optional sharper Lipschitz constant of f in (y,z) alone; negative means
    /// "use lipschitz_const". Monotonicity guards use this value.
    double driver_yz_lipschitz = -1.0;

    double yz_lipschitz() const {
        return driver_yz_lipschitz >= 0.0 ? driver_yz_lipschitz : lipschitz_const;
    }

    /// Checks dimensions, horizon and that every callable is set.
    void validate() const;

    // Evaluation wrappers that reject non-finite output with the offending arguments.
    Vec eval_drift(double t, const Vec& x, Control u, Control v) const;
    Mat eval_diffusion(double t, const Vec& x, Control u, Control v) const;
    double eval_driver(double t, const Vec& x, double y, const Vec& z, Control u, Control v) const;
    double eval_terminal(const Vec& x) const;
};

/// Finite discretisations of the compact control sets U and V.
struct ControlGrid {
    std::vector<Control> u_points;
    std::vector<Control> v_points;

    /// Both lists non-empty with distinct points.
    void validate() const;
    int u_size() const { return static_cast<int>(u_points.size()); }
    int v_size() const { return static_cast<int>(v_points.size()); }
};

struct HamiltonianArgs {
    double t = 0.0;
    Vec x;
    double y = 0.0;
    Vec p;
    Mat X;

    void validate(int dim_state) const;
};

/// Value of a finite sup-inf (or inf-sup) scan with the achieving indices.
/// `outer` indexes the outer optimiser's grid and `inner` the inner
/// optimiser's response at that outer point; ties resolve to the smallest index.
struct MinimaxValue {
    double value = 0.0;
    int outer = 0;
    int inner = 0;
};

/// max over i of min over j of value(i, j); smallest achieving indices.
template <class ValueFn>
MinimaxValue sup_inf_scan(int n_outer, int n_inner, ValueFn&& value) {
    MinimaxValue best{0.0, -1, -1};
    for (int i = 0; i < n_outer; ++i) {
        double lo = 0.0;
        int arg = -1;
        for (int j = 0; j < n_inner; ++j) {
            const double w = value(i, j);
            if (arg < 0 || w < lo) {
                lo = w;
                arg = j;
            }
        }
        if (best.outer < 0 || lo > best.value) best = {lo, i, arg};
    }
    return best;
}

/// min over i of max over j of value(i, j); smallest achieving indices.
template <class ValueFn>
MinimaxValue inf_sup_scan(int n_outer, int n_inner, ValueFn&& value) {
    MinimaxValue best{0.0, -1, -1};
    for (int i = 0; i < n_outer; ++i) {
        double hi = 0.0;
        int arg = -1;
        for (int j = 0; j < n_inner; ++j) {
            const double w = value(i, j);
            if (arg < 0 || w > hi) {
                hi = w;
                arg = j;
            }
        }
        if (best.outer < 0 || hi < best.value) best = {hi, i, arg};
    }
    return best;
}

/// H(t,x,y,p,X,u,v) = 1/2 tr(sigma sigma^T X) + p.b + f(t,x,y,p.sigma,u,v).
double hamiltonian(const GameSpec& spec, const HamiltonianArgs& args, Control u, Control v);

/// H^- = sup_u inf_v H. Returns (value, u_argmax, v_argmin).
MinimaxValue lower_hamiltonian(const GameSpec& spec, const ControlGrid& grid,
                               const HamiltonianArgs& args);

/// H^+ = inf_v sup_u H. Returns (value, v_argmin, u_argmax).
MinimaxValue upper_hamiltonian(const GameSpec& spec, const ControlGrid& grid,
                               const HamiltonianArgs& args);

/// H^+ - H^-, non-negative by the minimax inequality.
double isaacs_gap(const GameSpec& spec, const ControlGrid& grid, const HamiltonianArgs& args);

/// Localised driver built from a smooth test function phi:
///   F = d_s phi + 1/2 tr(sigma sigma^T D^2 phi) + D phi . b
///       + f(s, x, y + phi(s,x), z + D phi . sigma, u, v).
double local_driver_F(const GameSpec& spec, const TestFunction& phi, double s, const Vec& x,
                      double y, const Vec& z, Control u, Control v);

/// F1(s,x,y,z,u) = min over v of F. Returns (value, v_argmin) packed as
/// MinimaxValue{value, u_index, v_argmin}.
MinimaxValue F1(const GameSpec& spec, const ControlGrid& grid, const TestFunction& phi,
                double s, const Vec& x, double y, const Vec& z, int u_index);

/// F0(s,x,y,z) = max over u of F1. Returns (value, u_argmax, v_argmin).
MinimaxValue F0(const GameSpec& spec, const ControlGrid& grid, const TestFunction& phi,
                double s, const Vec& x, double y, const Vec& z);

/// Result of spot-checking the declared constants on random samples.
struct CoefficientCheck {
    bool lipschitz_ok = true;
    bool growth_ok = true;
    double worst_lipschitz_ratio = 0.0;  ///< max |db|+|dsigma| / (C |dx|)
    double worst_growth_ratio = 0.0;     ///< max (|f(0,0)|+|Phi|) / (C (1+|x|))
    int samples = 0;
};

/// Samples (t, x, x', u, v) with x in [-radius, radius]^n and compares against
/// spec.lipschitz_const.
CoefficientCheck spot_check_coefficients(const GameSpec& spec, const ControlGrid& grid,
                                         int samples, double radius, std::uint64_t seed);

}  // namespace isaacs
