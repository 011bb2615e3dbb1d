#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "isaacs/model.hpp"
#include "isaacs/sde_sim.hpp"

namespace isaacs {

/// How points outside the grid box are evaluated.
enum class BoundaryPolicy { clamp, extrapolate };

/// Tensor grid of uniform per-dimension axes with multilinear interpolation.
class StateGrid {
public:
    struct Axis {
        double min = -1.0;
        double max = 1.0;
        int nodes = 2;

        double step() const { return (max - min) / (nodes - 1); }
    };

    StateGrid() = default;
    explicit StateGrid(std::vector<Axis> axes, BoundaryPolicy policy = BoundaryPolicy::clamp);

    /// Same axis repeated `dim` times.
    static StateGrid uniform(int dim, double min, double max, int nodes,
                             BoundaryPolicy policy = BoundaryPolicy::clamp);

    int dim() const { return static_cast<int>(axes_.size()); }
    const std::vector<Axis>& axes() const { return axes_; }
    BoundaryPolicy policy() const { return policy_; }
    void set_policy(BoundaryPolicy p) { policy_ = p; }
    int size() const { return size_; }
    double step(int dim) const { return axes_[static_cast<std::size_t>(dim)].step(); }

    /// Row-major flat index (last dimension fastest).
    int flat(const std::vector<int>& multi) const;
    std::vector<int> multi(int flat) const;
    Vec point(int flat) const;
    int stride(int dim) const { return strides_[static_cast<std::size_t>(dim)]; }

    bool contains(const Vec& x) const;
    /// True if the node lies at least `margin` nodes away from every face.
    bool interior(int flat, int margin = 1) const;
    /// True if every coordinate lies in the central `fraction` of its axis.
    bool in_window(int flat, double fraction) const;
    /// Nodes with in_window(., fraction), in flat order.
    std::vector<int> window_nodes(double fraction) const;
    /// Flat index of the node nearest to x (clamped into the box).
    int nearest(const Vec& x) const;

    /// Interpolation stencil: up to 2^n (node, weight) pairs. Weights are
    /// non-negative under clamping; extrapolation may produce negative weights.
    struct Stencil {
        std::array<int, 8> node{};
        std::array<double, 8> weight{};
        int count = 0;
        bool outside = false;
    };
    Stencil stencil(const Vec& x) const;
    double interpolate(const Vec& values, const Vec& x) const;

    /// Shared sanity checks: at least 2 nodes per axis, finite bounds, 1 <= dim <= 3.
    void validate() const;

private:
    std::vector<Axis> axes_;
    std::vector<int> strides_;
    BoundaryPolicy policy_ = BoundaryPolicy::clamp;
    int size_ = 0;
};

enum class ValueTag : std::uint32_t { lower = 0, upper = 1 };

const char* to_string(ValueTag tag);

/// values[k][node] of W or U (or a PDE solution) on a time/state grid.
struct ValueField {
    TimeGrid tgrid;
    StateGrid sgrid;
    ValueTag tag = ValueTag::lower;
    std::vector<Vec> values;  ///< steps + 1 slices

    int steps() const { return tgrid.steps; }
    const Vec& slice(int k) const { return values[static_cast<std::size_t>(k)]; }
    double at(int k, const Vec& x) const { return sgrid.interpolate(slice(k), x); }
    double root(const Vec& x) const { return at(0, x); }

    /// Throws NumericalError on the first non-finite entry.
    void check_finite() const;
};

/// CSV: step,t,x0..,value with the #isaacs-lab-v1 header.
void write_field_csv(const ValueField& field, std::ostream& os);

/// Binary: 16-byte header ("VFLD", u32 version=1, u32 dims, u32 tag), then
/// f64 t0, f64 t1, u32 steps, per-dim (f64 min, f64 max, u32 nodes) and the
/// values in step-major order, all little-endian.
void write_field_binary(const ValueField& field, std::ostream& os);
ValueField read_field_binary(std::istream& is);

}  // namespace isaacs
