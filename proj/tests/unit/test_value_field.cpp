#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <sstream>

#include "isaacs/error.hpp"
#include "isaacs/value_field.hpp"
#include "support.hpp"

using namespace isaacs;
using namespace testing_support;

namespace {

ValueField sample_field(int dim, ValueTag tag) {
    ValueField f;
    f.tag = tag;
    f.tgrid = TimeGrid{0.25, 1.5, 3};
    std::vector<StateGrid::Axis> axes;
    for (int i = 0; i < dim; ++i) axes.push_back({-1.0 - i, 2.0 + 0.5 * i, 3 + i});
    f.sgrid = StateGrid(axes);
    std::mt19937_64 rng(static_cast<std::uint64_t>(dim));
    for (int k = 0; k <= 3; ++k) {
        Vec s(f.sgrid.size());
        for (int j = 0; j < s.size(); ++j) s[j] = uniform(rng, -10, 10);
        f.values.push_back(s);
    }
    return f;
}

}  // namespace

TEST_CASE("StateGrid: validation errors") {
    CHECK_THROWS_AS(StateGrid::uniform(1, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(StateGrid::uniform(1, 1, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(StateGrid::uniform(1, 0, INFINITY, 3), std::invalid_argument);
    CHECK_THROWS_AS(StateGrid::uniform(4, 0, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(StateGrid(std::vector<StateGrid::Axis>{}), std::invalid_argument);
    CHECK_NOTHROW(StateGrid::uniform(3, 0, 1, 2));
}

TEST_CASE("StateGrid: row-major indexing round-trips") {
    const StateGrid g({{0, 1, 3}, {0, 2, 4}, {-1, 1, 5}});
    CHECK(g.size() == 60);
    CHECK(g.stride(2) == 1);
    CHECK(g.stride(1) == 5);
    CHECK(g.stride(0) == 20);
    for (int f = 0; f < g.size(); ++f) CHECK(g.flat(g.multi(f)) == f);
    const Vec p = g.point(g.flat({2, 1, 4}));
    CHECK(p[0] == 1.0);
    CHECK(p[1] == doctest::Approx(2.0 / 3.0));
    CHECK(p[2] == 1.0);
}

TEST_CASE("StateGrid: windows, interior and nearest") {
    const StateGrid g = StateGrid::uniform(1, -2, 2, 9);
    CHECK(g.window_nodes(0.5) == std::vector<int>{2, 3, 4, 5, 6});
    CHECK(g.window_nodes(1.0).size() == 9);
    CHECK(g.interior(1));
    CHECK_FALSE(g.interior(0));
    CHECK_FALSE(g.interior(1, 2));
    CHECK(g.nearest(v1(0.26)) == 5);
    CHECK(g.nearest(v1(-100)) == 0);
    CHECK(g.nearest(v1(100)) == 8);
    CHECK(g.contains(v1(2.0)));
    CHECK_FALSE(g.contains(v1(2.01)));
}

TEST_CASE("StateGrid: multilinear interpolation reproduces affine functions") {
    const StateGrid g({{-1, 1, 5}, {0, 3, 4}});
    Vec vals(g.size());
    for (int j = 0; j < g.size(); ++j) {
        const Vec x = g.point(j);
        vals[j] = 2.0 - 3.0 * x[0] + 0.5 * x[1] + x[0] * x[1];
    }
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        Vec x(2);
        x << uniform(rng, -1, 1), uniform(rng, 0, 3);
        const double exact = 2.0 - 3.0 * x[0] + 0.5 * x[1] + x[0] * x[1];
        CHECK(g.interpolate(vals, x) == doctest::Approx(exact).epsilon(1e-12));
        const auto s = g.stencil(x);
        double total = 0.0;
        for (int c = 0; c < s.count; ++c) {
            CHECK(s.weight[static_cast<std::size_t>(c)] >= 0.0);
            total += s.weight[static_cast<std::size_t>(c)];
        }
        CHECK(total == doctest::Approx(1.0));
        CHECK_FALSE(s.outside);
    }
}

TEST_CASE("StateGrid: clamp versus extrapolate outside the box") {
    StateGrid g = StateGrid::uniform(1, 0, 1, 3);
    const Vec vals = (Vec(3) << 0.0, 0.5, 1.0).finished();
    CHECK(g.interpolate(vals, v1(1.5)) == 1.0);
    CHECK(g.interpolate(vals, v1(-0.5)) == 0.0);
    CHECK(g.stencil(v1(1.5)).outside);
    g.set_policy(BoundaryPolicy::extrapolate);
    CHECK(g.interpolate(vals, v1(1.5)) == doctest::Approx(1.5));
    CHECK(g.interpolate(vals, v1(-0.5)) == doctest::Approx(-0.5));
    const auto s = g.stencil(v1(1.5));
    CHECK(std::min(s.weight[0], s.weight[1]) < 0.0);
}

TEST_CASE("ValueField: check_finite reports the first bad entry") {
    ValueField f = sample_field(1, ValueTag::lower);
    CHECK_NOTHROW(f.check_finite());
    f.values[2][1] = std::nan("");
    CHECK_THROWS_WITH_AS(f.check_finite(), "non-finite value at step 2 node 1", NumericalError);
}

TEST_CASE("write_field_csv: header, columns and row count") {
    const ValueField f = sample_field(2, ValueTag::upper);
    std::ostringstream os;
    write_field_csv(f, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "#isaacs-lab-v1");
    std::getline(is, line);
    CHECK(line == "step,t,x0,x1,value");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 4 * f.sgrid.size());
}

TEST_CASE("binary field: 16-byte header and exact round trip") {
    for (int dim = 1; dim <= 3; ++dim) {
        for (ValueTag tag : {ValueTag::lower, ValueTag::upper}) {
            const ValueField f = sample_field(dim, tag);
            std::ostringstream os;
            write_field_binary(f, os);
            const std::string bytes = os.str();
            REQUIRE(bytes.size() >= 16);
            CHECK(bytes.compare(0, 4, "VFLD") == 0);
            std::uint32_t hdr[3];
            std::memcpy(hdr, bytes.data() + 4, 12);
            CHECK(hdr[0] == 1u);
            CHECK(hdr[1] == static_cast<std::uint32_t>(dim));
            CHECK(hdr[2] == static_cast<std::uint32_t>(tag));
            const std::size_t expect = 16 + 8 + 8 + 4 + static_cast<std::size_t>(dim) * 20 +
                                       4 * static_cast<std::size_t>(f.sgrid.size()) * 8;
            CHECK(bytes.size() == expect);

            std::istringstream is(bytes);
            const ValueField g = read_field_binary(is);
            CHECK(g.tag == tag);
            CHECK(g.tgrid.t0 == f.tgrid.t0);
            CHECK(g.tgrid.t1 == f.tgrid.t1);
            CHECK(g.steps() == f.steps());
            REQUIRE(g.sgrid.dim() == dim);
            for (int i = 0; i < dim; ++i) {
                CHECK(g.sgrid.axes()[static_cast<std::size_t>(i)].min == f.sgrid.axes()[static_cast<std::size_t>(i)].min);
                CHECK(g.sgrid.axes()[static_cast<std::size_t>(i)].nodes ==
                      f.sgrid.axes()[static_cast<std::size_t>(i)].nodes);
            }
            for (int k = 0; k <= f.steps(); ++k) CHECK(g.slice(k) == f.slice(k));
        }
    }
}

TEST_CASE("binary field: malformed input is rejected") {
    std::ostringstream os;
    write_field_binary(sample_field(1, ValueTag::lower), os);
    const std::string good = os.str();

    std::string bad = good;
    bad[0] = 'X';
    std::istringstream m(bad);
    CHECK_THROWS_WITH(read_field_binary(m), "binary field: bad magic");

    bad = good;
    bad[4] = 2;
    std::istringstream v(bad);
    CHECK_THROWS_WITH(read_field_binary(v), doctest::Contains("unsupported version"));

    bad = good;
    bad[8] = 7;
    std::istringstream d(bad);
    CHECK_THROWS_WITH(read_field_binary(d), "binary field: corrupt header");

    std::istringstream t(good.substr(0, good.size() - 3));
    CHECK_THROWS_WITH(read_field_binary(t), "binary field: truncated input");
}
