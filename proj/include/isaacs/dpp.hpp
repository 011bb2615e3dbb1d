#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "isaacs/bsde.hpp"
#include "isaacs/model.hpp"
#include "isaacs/sde_sim.hpp"
#include "isaacs/value_field.hpp"

namespace isaacs {

/// Side information gathered during a value iteration sweep.
struct DppDiagnostics {
    long boundary_hits = 0;          ///< children that fell outside the grid box
    long evaluations = 0;            ///< one-step operator evaluations
    double min_driver_weight = 1.0;  ///< 1 - C dt - C sqrt(d dt)
};

/// One-step backward semigroup over the binomial children of x:
///   y = E[w(x+)] + f(t_k, x, E[w(x+)], zbar, u, v) dt,  zbar = E[w(x+) dB^T]/dt
/// with w read from `next` by interpolation on `sgrid` (zbar = 0 when sigma = 0).
double one_step_value(const GameSpec& spec, const StateGrid& sgrid, const TimeGrid& tgrid, int k,
                      const Vec& x, const Vec& next, Control u, Control v, long* boundary_hits = nullptr);

/// Optimised one-step value: sup_u inf_v (lower, outer = u) or inf_v sup_u (upper, outer = v).
MinimaxValue one_step_opt(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                          const TimeGrid& tgrid, int k, const Vec& x, const Vec& next, ValueTag tag,
                          long* boundary_hits = nullptr);

/// Throws MonotonicityError when 1 - C dt - C sqrt(d dt) < 0, C the (y,z)
/// Lipschitz constant of f. Interpolation weights are non-negative under
/// clamping; with extrapolation, off-grid children are only counted.
void check_dpp_monotonicity(const GameSpec& spec, const StateGrid& sgrid, const TimeGrid& tgrid);

/// Backward dynamic programming on the state grid.
ValueField value_iteration(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                           const TimeGrid& tgrid, ValueTag tag, DppDiagnostics* diagnostics = nullptr);

/// Same recursion started from arbitrary terminal node values.
ValueField value_iteration(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                           const TimeGrid& tgrid, ValueTag tag, const Vec& terminal,
                           DppDiagnostics* diagnostics = nullptr);

enum class Player { u, v };

/// Feedback rule extracted from a field. `outer[k][node]` is the outer
/// optimiser's control; `response[k][node * n_outer + i]` is the inner
/// optimiser's best reply to outer control i.
struct FeedbackLaw {
    ValueTag tag = ValueTag::lower;
    TimeGrid tgrid;
    StateGrid sgrid;
    int n_outer = 0;
    std::vector<std::vector<int>> outer;
    std::vector<std::vector<int>> response;

    Player outer_player() const { return tag == ValueTag::lower ? Player::u : Player::v; }
};

/// Recomputes the arg-opt controls of each one-step problem from the field
/// (ties resolve to the smallest index).
FeedbackLaw epsilon_optimal_extract(const ValueField& field, const GameSpec& spec,
                                    const ControlGrid& controls);

/// The law's rule for one player as a control process: the outer player plays
/// its feedback, the inner player answers the opponent's current control. The
/// state is located on the grid by nearest node.
ControlProcess feedback_process(const FeedbackLaw& law, Player player);

struct ReplayReport {
    double field_value = 0.0;
    double replay_value = 0.0;
    double gap = 0.0;
};

/// Plays both extracted rules against each other on the binomial lattice from x0
/// and evaluates the BSDE payoff.
ReplayReport replay(const FeedbackLaw& law, const GameSpec& spec, const ControlGrid& controls,
                    const ValueField& field, const Vec& x0);

/// Nonanticipative strategy of the discrete game: the own control at a node of
/// the non-recombining tree given the opponent's controls along the path
/// (including the current step).
struct StrategyTable {
    Player owner = Player::v;
    int steps = 0;
    int branches = 2;
    int opponent_size = 0;
    /// entries[k][node * opponent_size^(k+1) + history code]; history code is
    /// the base-opponent_size number of the opponent's indices, oldest first.
    std::vector<std::vector<int>> entries;

    int lookup(int k, int node, const std::vector<int>& history) const;
};

struct BruteForceOptions {
    double budget = 1e6;  ///< maximum candidate (strategy, control process) pairs per side
    bool lower = true;
    bool upper = true;
};

struct BruteForceResult {
    std::optional<double> lower;
    std::optional<double> upper;
    std::optional<StrategyTable> lower_strategy;  ///< minimising beta for the lower value
    std::optional<StrategyTable> upper_strategy;  ///< maximising alpha for the upper value
    double lower_candidates = 0.0;
    double upper_candidates = 0.0;
};

/// Candidate count min_beta max_u (lower) or max_alpha min_v (upper) for an
/// N-step tree with 2^d branches.
double brute_force_candidates(const ControlGrid& controls, int steps, int dim_noise, ValueTag tag);

/// Literal enumeration of the discrete game on the binomial tree from x0.
/// Throws BudgetError when a requested side needs more candidates than the budget.
BruteForceResult brute_force_game(const GameSpec& spec, const ControlGrid& controls,
                                  const TimeGrid& tgrid, const Vec& x0,
                                  const BruteForceOptions& options = {});

/// Best value the opponent reaches against a fixed control process of
/// `player`, seeing its current control: exact recursion over the tree of
/// opponent choices. The tree size (|opponent| 2^d)^N is capped by `budget`.
double best_response_value(const GameSpec& spec, const ControlGrid& controls, const TimeGrid& tgrid,
                           const Vec& x0, const ControlProcess& fixed, Player player,
                           double budget = 1e6);

/// Second enumeration of min_beta max_u E[J(u, beta(u))] routed through the
/// forward simulator and the BSDE solver; compared against brute_force_game.
struct ExpectationReport {
    double brute_force = 0.0;
    double expectation = 0.0;
    double gap = 0.0;
    bool passed = false;
};

ExpectationReport expectation_formulation_check(const GameSpec& spec, const ControlGrid& controls,
                                                const TimeGrid& tgrid, const Vec& x0,
                                                double budget = 1e6);

/// Spatial Lipschitz ratio and time-Hoelder exponent of a field.
struct RegularityReport {
    double lipschitz = 0.0;        ///< max |dW/dx| over interior neighbours and slices
    double holder_exponent = 0.0;  ///< fitted slope of log increment vs log lag
    double holder_constant = 0.0;  ///< max |W(t)-W(t')| / ((1+|x|) |t-t'|^(1/2))
    bool holder_checked = false;   ///< false when every time increment vanishes
    bool holder_ok = true;         ///< exponent >= 0.4
};

RegularityReport regularity_probe(const ValueField& field, double window = 0.5);

/// Lipschitz ratios across a refinement sequence: ok iff each finer ratio is
/// at most 1.5 times the coarser one (both zero passes).
struct RefinementReport {
    std::vector<double> lipschitz;
    bool ok = true;
};

RefinementReport lipschitz_refinement(const std::vector<ValueField>& fields, double window = 0.5);

}  // namespace isaacs
