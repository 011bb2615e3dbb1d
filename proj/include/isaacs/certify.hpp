#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "isaacs/bsde.hpp"
#include "isaacs/model.hpp"
#include "isaacs/sde_sim.hpp"
#include "isaacs/test_function.hpp"

namespace isaacs {

/// A window [t, t + delta] started from x with a smooth test function phi.
struct LocalizationInstance {
    const GameSpec* spec = nullptr;
    ControlGrid controls;
    Polynomial phi{1};
    double t = 0.0;
    Vec x;
    double delta = 0.1;
    int steps = 8;  ///< lattice steps inside the window

    TimeGrid window() const { return {t, t + delta, steps}; }
    /// 0 < delta <= T - t, steps >= 1, dimensions consistent.
    void validate() const;
};

/// Generator used for the driver F of the localised BSDE.
enum class Generator {
    analytic,       ///< d_s phi + 1/2 tr(sigma sigma^T D^2 phi) + D phi . b + f(..., y + phi, z + D phi sigma, ...)
    lattice_exact,  ///< one-step lattice increments of phi in place of the derivatives
};

/// Y^1 at the root: BSDE along the simulated X with driver F and terminal 0.
double solve_Y1(const LocalizationInstance& inst, const ControlProcess& u, const ControlProcess& v,
                Generator gen = Generator::analytic);

/// Same with the state argument of F frozen at x.
BsdeSolution solve_Y2_full(const LocalizationInstance& inst, const ControlProcess& u, const ControlProcess& v);
double solve_Y2(const LocalizationInstance& inst, const ControlProcess& u, const ControlProcess& v);

struct IdentityReport {
    double y1 = 0.0;
    double semigroup = 0.0;  ///< G_{t,t+delta}[phi(t+delta, X)]
    double phi0 = 0.0;       ///< phi(t, x)
    double gap = 0.0;        ///< |y1 - (semigroup - phi0)|
};

/// Y^1_t = G_{t,t+delta}[phi(t+delta, X_{t+delta})] - phi(t, x), both sides
/// computed separately on the lattice (Y^1 with the lattice-exact generator).
IdentityReport localization_identity(const LocalizationInstance& inst, const ControlProcess& u,
                                     const ControlProcess& v);

/// G_{t,T}[Phi(X_T)] against G_{t,t+delta}[Y_{t+delta}] on a lattice bundle
/// split at `split_step`; returns the largest root gap.
double semigroup_consistency_gap(const GameSpec& spec, const PathBundle& bundle, int split_step,
                                 const BsdeOptions& options = {});

struct RateRow {
    double delta = 0.0;
    double diff12 = 0.0;     ///< max over control pairs |Y1 - Y2|
    double aggregate = 0.0;  ///< max over pairs of dt sum_k E|Y2_k| + E|Z2_k|
};

struct RateReport {
    std::vector<RateRow> rows;
    double slope12 = 0.0;
    double intercept12 = 0.0;
    double slope_aggregate = 0.0;
    bool vacuous = false;  ///< every |Y1 - Y2| below 1e-14
    bool passed = false;   ///< both slopes >= min_slope with finite intercept
    std::string note;
};

/// Log-log slopes over a delta ladder with constant control pairs; the delta
/// values are clamped to the remaining horizon.
RateReport localization_rate_check(const LocalizationInstance& base, const std::vector<double>& deltas,
                         double min_slope = 1.4);

struct OdeResult {
    double value = 0.0;
    std::vector<double> grid_values;  ///< Y0 at the window's lattice times (when requested)
    int accepted_steps = 0;
    double self_check = 0.0;  ///< |value - value at halved tolerance|
};

/// -Y0' = F0(s, x, Y0, 0), Y0(t + delta) = 0, integrated backwards by RK4 with
/// step doubling (absolute tolerance 1e-10) and a halved-tolerance rerun.
/// Throws NumericalError when the step size collapses.
OdeResult solve_Y0_ode(const LocalizationInstance& inst, double tol = 1e-10);

/// Generic backward ODE integration used by solve_Y0_ode.
OdeResult integrate_backward(const std::function<double(double s, double y)>& rhs, double t0, double t1,
                             double y_end, const std::vector<double>& checkpoints, double tol);

struct SupInfReport {
    double enumeration = 0.0;   ///< max over u sequences of min over v sequences of Y2
    double ode = 0.0;           ///< Y0(t)
    double truncation = 0.0;    ///< Euler truncation bound against the ODE
    double tolerance = 0.0;     ///< 1e-8 (1 + |Y0|) + truncation
    double y3_gap = 0.0;        ///< max over u of |Y3 - min_v Y2|
    double adapted_gap = 0.0;   ///< |adapted enumeration - deterministic enumeration|
    bool adapted_checked = false;
    double candidates = 0.0;
    bool passed = false;
    std::string note;
};

/// Enumerates deterministic per-step control sequences on the window (and,
/// with `adapted`, node-adapted processes for windows of at most 2 steps).
/// Throws BudgetError when |U|^N |V|^N exceeds `budget`.
SupInfReport supinf_reduction_check(const LocalizationInstance& inst, bool adapted = false,
                                    double budget = 1e6);

/// CSV: check,instance,delta,lhs,bound,slope,verdict
struct CertifyRow {
    std::string check;
    int instance = 0;
    double delta = 0.0;
    double lhs = 0.0;
    double bound = 0.0;
    double slope = 0.0;
    bool pass = false;
};

void write_certify_csv(const std::vector<CertifyRow>& rows, std::ostream& os);

}  // namespace isaacs
