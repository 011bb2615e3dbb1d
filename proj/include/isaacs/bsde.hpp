#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "isaacs/model.hpp"
#include "isaacs/sde_sim.hpp"

namespace isaacs {

/// Arguments of a node-local driver evaluation. `step`/`node` locate the node in
/// the bundle so that drivers may carry state-measurable perturbations.
struct DriverPoint {
    int step;
    int node;
    double t;
    const Vec& x;
    double y;
    const Vec& z;
    Control u;
    Control v;
};

using Driver = std::function<double(const DriverPoint&)>;

/// The game's own driver f(t, x, y, z, u, v).
Driver game_driver(const GameSpec& spec);

/// Wraps a g(t, y, z) driver that ignores state and controls.
Driver simple_driver(std::function<double(double t, double y, const Vec& z)> g);

struct BsdeOptions {
    Driver driver;                 ///< empty: the game's driver
    bool implicit = false;         ///< fixed-point in y_k instead of E_k[y_{k+1}]
    int implicit_iterations = 5;
    double implicit_tol = 1e-12;
    int basis_degree = 2;          ///< gaussian bundles: total polynomial degree in the state
};

/// Scalar terminal value per node of the final layer.
struct TerminalData {
    Vec values;

    static TerminalData from_function(const PathBundle& bundle,
                                      const std::function<double(const Vec&)>& fn);
    static TerminalData constant(const PathBundle& bundle, double c);
};

/// (y, z) per step and node. y[k] has one entry per node of layer k; z[k] is d x m_k.
struct BsdeSolution {
    std::vector<Vec> y;
    std::vector<Mat> z;
    std::string scheme;
    int basis_size = 0;

    double root() const { return y.front()[0]; }
};

/// E_k[next | F_k] for every node of layer k. Lattice: exact child average.
/// Gaussian: weighted least squares on monomials of the state of total degree
/// <= basis_degree; collapses to the plain mean when every path shares the state.
Mat conditional_expectation(const PathBundle& bundle, int k, const Mat& next_values,
                            int basis_degree = 2);

/// Backward Euler: z_k = E_k[y_{k+1} dB_k^T]/dt, y_k = E_k[y_{k+1}] + g(t_k, x_k, ., z_k) dt.
/// Throws NumericalError("degenerate basis ...") or ("driver blow-up ...").
BsdeSolution solve_backward(const GameSpec& spec, const PathBundle& bundle,
                            const TerminalData& terminal, const BsdeOptions& options = {});

/// Backward semigroup G_{t, t+delta}[eta]: the solution at the initial layer of a
/// bundle whose last layer carries eta. One value per initial node.
Vec semigroup_G(const GameSpec& spec, const PathBundle& bundle, const TerminalData& eta,
                const BsdeOptions& options = {});

/// J(t, x; u, v) = Y_t with terminal Phi(X_T).
double cost_J(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& grid,
              const NoiseModel& noise, const Vec& x0, const ControlProcess& u,
              const ControlProcess& v, const BsdeOptions& options = {},
              Information info = Information::simultaneous);

/// Verdict of a numerical oracle with its worst observed margin.
struct OracleReport {
    std::string name;
    bool passed = true;
    double worst_margin = 0.0;
    int witness_step = -1;
    int witness_node = -1;
    long checks = 0;
    std::string note;
};

std::ostream& operator<<(std::ostream& os, const OracleReport& r);

/// Comparison check: with xi1 >= xi2 and g1 >= g2, y1 >= y2 - tol at every node.
/// Lattice tol 1e-10, Gaussian tol 3 standard errors. Dominance of the data is
/// verified first (g1 - g2 evaluated at both solutions).
OracleReport comparison_oracle(const GameSpec& spec, const PathBundle& bundle,
                               const TerminalData& xi1, const Driver& g1,
                               const TerminalData& xi2, const Driver& g2,
                               const BsdeOptions& options = {});

/// Node-local perturbation phi_i(t, x) attached to a driver.
using Perturbation = std::function<double(int step, int node, double t, const Vec& x)>;

/// A-priori estimate with beta = 16(1 + C^2):
///   |y1_t - y2_t|^2 <= E[e^{beta(T-t)} |xi1-xi2|^2 | F_t] + E[int e^{beta(s-t)} |phi1-phi2|^2 ds | F_t]
/// for drivers g + phi_i. Checked at every node on lattices, at the root otherwise.
OracleReport stability_estimate_check(const GameSpec& spec, const PathBundle& bundle,
                                      const Driver& g, const Perturbation& phi1,
                                      const Perturbation& phi2, const TerminalData& xi1,
                                      const TerminalData& xi2, const BsdeOptions& options = {});

/// Mixed initial condition sum x_i 1_{A_i} with P(A_i) = q_i: the root values of
/// the mixed lattice must equal the per-point root values (and hence their
/// q-weighted mixture) to 1e-10.
OracleReport partition_mixing_check(const GameSpec& spec, const ControlGrid& controls,
                                    const TimeGrid& grid, const InitialCondition& partition,
                                    const ControlProcess& u, const ControlProcess& v,
                                    const BsdeOptions& options = {});

/// CSV: step,node,y,z0..
void write_solution_csv(const BsdeSolution& sol, std::ostream& os);

}  // namespace isaacs
