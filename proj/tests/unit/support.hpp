#pragma once

#include <functional>
#include <random>

#include "isaacs/model.hpp"

namespace testing_support {

using isaacs::Control;
using isaacs::GameSpec;
using isaacs::Mat;
using isaacs::Vec;

using ScalarCoeff = std::function<double(double t, double x, Control u, Control v)>;
using ScalarDriver = std::function<double(double t, double x, double y, double z, Control u, Control v)>;

/// n = d = 1 game from scalar callables.
inline GameSpec scalar_spec(ScalarCoeff b, ScalarCoeff s, ScalarDriver f,
                            std::function<double(double)> phi = [](double) { return 0.0; },
                            double horizon = 1.0, double lipschitz = 1.0) {
    GameSpec g;
    g.horizon = horizon;
    g.lipschitz_const = lipschitz;
    g.drift = [b](double t, const Vec& x, Control u, Control v) { return Vec::Constant(1, b(t, x[0], u, v)); };
    g.diffusion = [s](double t, const Vec& x, Control u, Control v) { return Mat::Constant(1, 1, s(t, x[0], u, v)); };
    g.driver = [f](double t, const Vec& x, double y, const Vec& z, Control u, Control v) {
        return f(t, x[0], y, z[0], u, v);
    };
    g.terminal = [phi](const Vec& x) { return phi(x[0]); };
    return g;
}

inline ScalarCoeff constant_coeff(double c) {
    return [c](double, double, Control, Control) { return c; };
}

inline ScalarDriver zero_driver() {
    return [](double, double, double, double, Control, Control) { return 0.0; };
}

inline Vec v1(double x) { return Vec::Constant(1, x); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace testing_support
