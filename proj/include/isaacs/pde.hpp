#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "isaacs/model.hpp"
#include "isaacs/test_function.hpp"
#include "isaacs/value_field.hpp"

namespace isaacs {

/// Explicit monotone finite differences on a StateGrid: central gradient,
/// standard diagonal second differences and sign-dependent cross differences
/// along the stencil diagonals.
struct FdScheme {
    std::vector<double> h;
    double dt = 0.0;
    BoundaryPolicy policy = BoundaryPolicy::clamp;

    static FdScheme from(const StateGrid& sgrid, const TimeGrid& tgrid);
};

/// Largest dt for which every stencil weight stays non-negative, scanned over
/// the grid nodes, control pairs and a few times. Throws MonotonicityError with
/// "stencil not monotone for this sigma sigma^T" if no dt works.
double max_stable_dt(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                     double t0, double t1);

/// Steps needed on [t0, t1] to satisfy max_stable_dt.
int stable_steps(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                 double t0, double t1);

/// V_k = V_{k+1} + dt H^-/+(t_k, x, V_{k+1}, D_h V_{k+1}, D^2_h V_{k+1}).
/// Throws MonotonicityError before using a node whose stencil would carry a
/// negative weight.
ValueField solve_isaacs(const GameSpec& spec, const ControlGrid& controls, const StateGrid& sgrid,
                        const TimeGrid& tgrid, ValueTag tag);

struct ProbeOptions {
    double c_probe = 10.0;
    double window = 0.5;  ///< central fraction of each axis searched for touching points
};

struct ProbeRow {
    int phi_id = 0;
    std::string kind;  ///< "sub" (max of field - phi) or "super" (min)
    int step = -1;
    Vec x;
    double residual = 0.0;
    std::string verdict;  ///< pass, fail or skipped
};

struct ProbeReport {
    std::vector<ProbeRow> rows;
    int violations = 0;
    int skipped = 0;
    int evaluated = 0;
    double tolerance = 0.0;
    double worst_sub = 0.0;    ///< most negative sub residual
    double worst_super = 0.0;  ///< most positive super residual
};

/// phi_t + H(t_k, x, W, D phi, D^2 phi) with the lower (upper) Hamiltonian for a
/// lower (upper) field; y is the field value at the node.
double viscosity_residual_at(const ValueField& field, const GameSpec& spec, const ControlGrid& controls,
                             const TestFunction& phi, int k, int node);

/// At the grid argmax (argmin) of field - phi over the interior window and the
/// steps 1..N-1, tests the sub (super) inequality with tolerance
/// c_probe (h + dt). Touching points on the window edge or at the end steps are skipped.
ProbeReport viscosity_residual_probe(const ValueField& field, const GameSpec& spec,
                                     const ControlGrid& controls,
                                     const std::vector<Polynomial>& family,
                                     const ProbeOptions& options = {});

void write_probe_csv(const ProbeReport& report, std::ostream& os);

struct AgreementOptions {
    double tolerance = 5e-2;       ///< base-resolution discrepancy bound
    double min_ratio = 4.0 / 3.0;  ///< base / refined discrepancy
    double exact_floor = 1e-10;    ///< below this at both resolutions the ratio is not used
    double window = 0.25;          ///< central fraction of each axis compared
};

struct AgreementReport {
    double base = 0.0;
    double refined = 0.0;
    double ratio = 0.0;  ///< 0 when both are under the exactness floor
    bool exact = false;
    bool passed = false;
};

/// Max discrepancy between the DPP field and the PDE field over all slices on
/// the central window.
double field_discrepancy(const ValueField& a, const ValueField& b, double window);

/// DPP vs PDE at (h, dt) and (h/2, dt/4).
AgreementReport cross_method_agreement(const GameSpec& spec, const ControlGrid& controls,
                                       const StateGrid& sgrid, const TimeGrid& tgrid, ValueTag tag,
                                       const AgreementOptions& options = {});

/// Same grid with each axis' spacing halved.
StateGrid refine(const StateGrid& sgrid);

}  // namespace isaacs
