#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "isaacs/model.hpp"

namespace isaacs {

/// Uniform time grid t0 < t1 with `steps` intervals.
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    int steps = 1;

    double dt() const { return (t1 - t0) / steps; }
    double time(int k) const { return k == steps ? t1 : t0 + k * dt(); }
    /// Checks 0 <= t0 < t1 <= horizon (with a 1e-12 relative slack) and steps >= 1.
    void validate(double horizon) const;
};

enum class NoiseKind { gaussian, binomial_lattice };

/// Brownian increments: either M Gaussian paths or the exact +-sqrt(dt)
/// binomial lattice (2^d branches per step, probability 2^-d each).
struct NoiseModel {
    NoiseKind kind = NoiseKind::binomial_lattice;
    int paths = 1;            ///< gaussian only
    std::uint64_t seed = 0;   ///< gaussian only
    /// Lattice only: merge nodes that share the per-dimension count of up-moves.
    /// Valid when the state after k steps depends on the noise only through those
    /// counts; simulate() verifies this and throws otherwise.
    bool recombine = false;
    /// Lattice only: maximum total node count before refusing.
    std::size_t node_budget = std::size_t{1} << 22;

    static NoiseModel gaussian(int paths, std::uint64_t seed) {
        return {NoiseKind::gaussian, paths, seed, false};
    }
    static NoiseModel lattice(bool recombine = false) {
        return {NoiseKind::binomial_lattice, 1, 0, recombine};
    }
};

/// Information visible to a control process at a node. `noise_history` holds the
/// d*step increments observed so far (step-major); `opponent` is the opponent's
/// control index at the same step when the process plays as a strategy, else -1.
struct ControlContext {
    int step = 0;
    double t = 0.0;
    const Vec* state = nullptr;
    std::span<const double> noise_history;
    int opponent = -1;
};

/// Assigns a control-grid index from information up to the current step only.
using ControlProcess = std::function<int(const ControlContext&)>;

ControlProcess constant_control(int index);
/// Deterministic open-loop schedule: index per step (last entry repeats).
ControlProcess open_loop_control(std::vector<int> schedule);

/// Which player, if any, observes the other's current-step control.
enum class Information { simultaneous, v_sees_u, u_sees_v };

/// One time slice of a bundle. For Gaussian bundles node i is path i; for
/// lattices each node has 2^d children in the next layer.
struct Layer {
    Mat states;                  ///< n x m
    std::vector<double> weights; ///< marginal probability of each node; sums to 1
    std::vector<int> u_index;    ///< control applied from this node (empty on the last layer)
    std::vector<int> v_index;
    /// Gaussian: d x m increments applied from each node. Lattice: d x 2^d
    /// branch increments shared by all nodes. Empty on the last layer.
    Mat increments;
    /// Lattice: m x 2^d child indices (row-major). Empty for Gaussian bundles.
    std::vector<int> children;

    int size() const { return static_cast<int>(weights.size()); }
};

/// Simulated forward trajectories X^{t,x;u,v} with their driving increments.
struct PathBundle {
    TimeGrid grid;
    NoiseKind kind = NoiseKind::binomial_lattice;
    int dim_state = 1;
    int dim_noise = 1;
    ControlGrid controls;
    std::vector<Layer> layers;  ///< steps + 1 layers

    int steps() const { return grid.steps; }
    int branches() const { return kind == NoiseKind::gaussian ? 1 : (1 << dim_noise); }
    int child(int k, int node, int branch) const {
        return kind == NoiseKind::gaussian
                   ? node
                   : layers[static_cast<std::size_t>(k)].children[static_cast<std::size_t>(node * branches() + branch)];
    }
    /// Increment from node at step k along `branch`.
    Vec increment(int k, int node, int branch) const;

    Control u_at(int k, int node) const;
    Control v_at(int k, int node) const;
};

/// Starting distribution: several initial states with probabilities (a
/// simple F_t-measurable initial condition). A single state has weight 1.
struct InitialCondition {
    std::vector<Vec> states;
    std::vector<double> weights;

    static InitialCondition point(const Vec& x) { return {{x}, {1.0}}; }
};

/// Explicit Euler-Maruyama: x_{k+1} = x_k + b dt + sigma dB.
/// Throws NumericalError("blow-up at step k ...") once |x| exceeds 1e12.
PathBundle simulate(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& grid,
                    const NoiseModel& noise, const InitialCondition& x0, const ControlProcess& u,
                    const ControlProcess& v, Information info = Information::simultaneous);

PathBundle simulate(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& grid,
                    const NoiseModel& noise, const Vec& x0, const ControlProcess& u,
                    const ControlProcess& v, Information info = Information::simultaneous);

/// Bundle with layers [0, last_step]; the time grid is shortened accordingly.
PathBundle truncate(const PathBundle& bundle, int last_step);

/// Sum of weights of every layer minus one, maximised in absolute value.
double weight_defect(const PathBundle& bundle);

struct MomentReport {
    int p = 2;
    double sup_moment = 0.0;        ///< E[sup_s |X_s|^p]
    double sup_dev_moment = 0.0;    ///< E[sup_s |X_s - x0|^p]
    double sup_dev_stderr = 0.0;
    std::vector<double> deltas;     ///< nested sub-horizons
    std::vector<double> dev_moments;///< E[sup_{s<=t0+delta} |X_s - x0|^p]
    double fitted_exponent = 0.0;
    bool exponent_checked = false;
    bool flagged = false;           ///< fitted exponent < p/2 - 0.3
};

/// Weighted moment estimates over the bundle and the log-log slope of the
/// sup-deviation moment against delta over halving sub-horizons.
MomentReport moment_check(const PathBundle& bundle, const Vec& x0, int p, int sub_horizons = 3);

/// CSV: path,step,t,x0..,dB0..,u_idx,v_idx,weight. For lattices `path` is the
/// node index within its step and dB is left empty (branch-dependent).
void write_bundle_csv(const PathBundle& bundle, std::ostream& os);

}  // namespace isaacs
