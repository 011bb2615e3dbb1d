#include "isaacs/value_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "isaacs/error.hpp"

namespace isaacs {

static_assert(std::endian::native == std::endian::little, "binary field format assumes little-endian");

StateGrid::StateGrid(std::vector<Axis> axes, BoundaryPolicy policy)
    : axes_(std::move(axes)), policy_(policy) {
    validate();
    strides_.assign(axes_.size(), 1);
    size_ = 1;
    for (int i = dim() - 1; i >= 0; --i) {
        strides_[static_cast<std::size_t>(i)] = size_;
        size_ *= axes_[static_cast<std::size_t>(i)].nodes;
    }
}

StateGrid StateGrid::uniform(int dim, double min, double max, int nodes, BoundaryPolicy policy) {
    return StateGrid(std::vector<Axis>(static_cast<std::size_t>(dim), Axis{min, max, nodes}), policy);
}

void StateGrid::validate() const {
    if (axes_.empty() || axes_.size() > 3)
        throw std::invalid_argument("state grid: dimension must be 1, 2 or 3");
    for (const auto& a : axes_) {
        if (a.nodes < 2) throw std::invalid_argument("state grid: at least 2 nodes per dimension");
        if (!std::isfinite(a.min) || !std::isfinite(a.max) || !(a.max > a.min))
            throw std::invalid_argument("state grid: bounds must be finite with min < max");
    }
}

int StateGrid::flat(const std::vector<int>& m) const {
    int f = 0;
    for (int i = 0; i < dim(); ++i) f += m[static_cast<std::size_t>(i)] * strides_[static_cast<std::size_t>(i)];
    return f;
}

std::vector<int> StateGrid::multi(int f) const {
    std::vector<int> m(axes_.size());
    for (int i = 0; i < dim(); ++i) {
        m[static_cast<std::size_t>(i)] = f / strides_[static_cast<std::size_t>(i)];
        f %= strides_[static_cast<std::size_t>(i)];
    }
    return m;
}

Vec StateGrid::point(int f) const {
    Vec x(dim());
    for (int i = 0; i < dim(); ++i) {
        const auto& a = axes_[static_cast<std::size_t>(i)];
        const int idx = (f / strides_[static_cast<std::size_t>(i)]) % a.nodes;
        x[i] = idx == a.nodes - 1 ? a.max : a.min + idx * a.step();
    }
    return x;
}

bool StateGrid::contains(const Vec& x) const {
    for (int i = 0; i < dim(); ++i) {
        const auto& a = axes_[static_cast<std::size_t>(i)];
        const double slack = 1e-12 * a.step();
        if (x[i] < a.min - slack || x[i] > a.max + slack) return false;
    }
    return true;
}

bool StateGrid::interior(int f, int margin) const {
    const auto m = multi(f);
    for (int i = 0; i < dim(); ++i) {
        const int idx = m[static_cast<std::size_t>(i)];
        if (idx < margin || idx > axes_[static_cast<std::size_t>(i)].nodes - 1 - margin) return false;
    }
    return true;
}

bool StateGrid::in_window(int f, double fraction) const {
    const Vec x = point(f);
    for (int i = 0; i < dim(); ++i) {
        const auto& a = axes_[static_cast<std::size_t>(i)];
        const double mid = 0.5 * (a.min + a.max), half = 0.5 * (a.max - a.min);
        if (std::abs(x[i] - mid) > fraction * half + 1e-9 * a.step()) return false;
    }
    return true;
}

std::vector<int> StateGrid::window_nodes(double fraction) const {
    std::vector<int> out;
    for (int j = 0; j < size_; ++j)
        if (in_window(j, fraction)) out.push_back(j);
    return out;
}

int StateGrid::nearest(const Vec& x) const {
    int f = 0;
    for (int i = 0; i < dim(); ++i) {
        const auto& a = axes_[static_cast<std::size_t>(i)];
        const long idx = std::lround((x[i] - a.min) / a.step());
        f += static_cast<int>(std::clamp<long>(idx, 0, a.nodes - 1)) * strides_[static_cast<std::size_t>(i)];
    }
    return f;
}

StateGrid::Stencil StateGrid::stencil(const Vec& x) const {
    Stencil s;
    const int n = dim();
    std::array<int, 3> base{};
    std::array<double, 3> frac{};
    for (int i = 0; i < n; ++i) {
        const auto& a = axes_[static_cast<std::size_t>(i)];
        const double pos = (x[i] - a.min) / a.step();
        if (pos < -1e-12 || pos > a.nodes - 1 + 1e-12) s.outside = true;
        int cell = static_cast<int>(std::floor(pos));
        cell = std::clamp(cell, 0, a.nodes - 2);
        double r = pos - cell;
        if (policy_ == BoundaryPolicy::clamp) r = std::clamp(r, 0.0, 1.0);
        base[static_cast<std::size_t>(i)] = cell;
        frac[static_cast<std::size_t>(i)] = r;
    }
    s.count = 1 << n;
    for (int c = 0; c < s.count; ++c) {
        int f = 0;
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            const bool hi = (c >> i) & 1;
            const double r = frac[static_cast<std::size_t>(i)];
            w *= hi ? r : 1.0 - r;
            f += (base[static_cast<std::size_t>(i)] + (hi ? 1 : 0)) * strides_[static_cast<std::size_t>(i)];
        }
        s.node[static_cast<std::size_t>(c)] = f;
        s.weight[static_cast<std::size_t>(c)] = w;
    }
    return s;
}

double StateGrid::interpolate(const Vec& values, const Vec& x) const {
    const Stencil s = stencil(x);
    double out = 0.0;
    for (int c = 0; c < s.count; ++c) {
        const double w = s.weight[static_cast<std::size_t>(c)];
        if (w != 0.0) out += w * values[s.node[static_cast<std::size_t>(c)]];
    }
    return out;
}

const char* to_string(ValueTag tag) { return tag == ValueTag::lower ? "lower" : "upper"; }

void ValueField::check_finite() const {
    for (std::size_t k = 0; k < values.size(); ++k) {
        for (Eigen::Index i = 0; i < values[k].size(); ++i) {
            if (!std::isfinite(values[k][i])) {
                std::ostringstream os;
                os << "non-finite value at step " << k << " node " << i;
                throw NumericalError(os.str());
            }
        }
    }
}

void write_field_csv(const ValueField& field, std::ostream& os) {
    os << "#isaacs-lab-v1\nstep,t";
    for (int i = 0; i < field.sgrid.dim(); ++i) os << ",x" << i;
    os << ",value\n";
    os.precision(17);
    for (int k = 0; k <= field.steps(); ++k) {
        const double t = field.tgrid.time(k);
        for (int j = 0; j < field.sgrid.size(); ++j) {
            os << k << ',' << t;
            const Vec x = field.sgrid.point(j);
            for (int i = 0; i < x.size(); ++i) os << ',' << x[i];
            os << ',' << field.slice(k)[j] << '\n';
        }
    }
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw std::runtime_error("binary field: truncated input");
    return v;
}

}  // namespace

void write_field_binary(const ValueField& field, std::ostream& os) {
    os.write("VFLD", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(field.sgrid.dim()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(field.tag));
    put<double>(os, field.tgrid.t0);
    put<double>(os, field.tgrid.t1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(field.tgrid.steps));
    for (const auto& a : field.sgrid.axes()) {
        put<double>(os, a.min);
        put<double>(os, a.max);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(a.nodes));
    }
    for (const auto& s : field.values)
        os.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size() * sizeof(double)));
}

ValueField read_field_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "VFLD", 4) != 0)
        throw std::runtime_error("binary field: bad magic");
    const auto version = get<std::uint32_t>(is);
    if (version != 1) throw std::runtime_error("binary field: unsupported version " + std::to_string(version));
    const auto dims = get<std::uint32_t>(is);
    const auto tag = get<std::uint32_t>(is);
    if (dims < 1 || dims > 3 || tag > 1) throw std::runtime_error("binary field: corrupt header");
    ValueField f;
    f.tag = static_cast<ValueTag>(tag);
    f.tgrid.t0 = get<double>(is);
    f.tgrid.t1 = get<double>(is);
    f.tgrid.steps = static_cast<int>(get<std::uint32_t>(is));
    std::vector<StateGrid::Axis> axes(dims);
    for (auto& a : axes) {
        a.min = get<double>(is);
        a.max = get<double>(is);
        a.nodes = static_cast<int>(get<std::uint32_t>(is));
    }
    f.sgrid = StateGrid(axes);
    f.values.assign(static_cast<std::size_t>(f.tgrid.steps + 1), Vec(f.sgrid.size()));
    for (auto& s : f.values)
        if (!is.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(s.size() * sizeof(double))))
            throw std::runtime_error("binary field: truncated input");
    return f;
}

}  // namespace isaacs
