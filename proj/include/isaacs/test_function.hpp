#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "isaacs/model.hpp"

namespace isaacs {

/// Smooth scalar function phi(t, x) with analytic first time derivative,
/// gradient and Hessian in x.
class TestFunction {
public:
    virtual ~TestFunction() = default;
    virtual double value(double t, const Vec& x) const = 0;
    virtual double time_derivative(double t, const Vec& x) const = 0;
    virtual Vec gradient(double t, const Vec& x) const = 0;
    virtual Mat hessian(double t, const Vec& x) const = 0;
    virtual std::string describe() const = 0;
};

/// Polynomial in (t, x_1..x_n): sum of coef * t^a * prod x_i^{k_i}.
class Polynomial final : public TestFunction {
public:
    struct Term {
        double coef = 0.0;
        int t_power = 0;
        std::vector<int> x_powers;
    };

    explicit Polynomial(int dim) : dim_(dim) {}

    /// Appends a term; x_powers.size() must equal dim.
    Polynomial& add(double coef, int t_power, std::vector<int> x_powers);
    Polynomial& add(const Polynomial& other, double scale = 1.0);

    int dim() const { return dim_; }
    int degree() const;
    const std::vector<Term>& terms() const { return terms_; }

    double value(double t, const Vec& x) const override;
    double time_derivative(double t, const Vec& x) const override;
    Vec gradient(double t, const Vec& x) const override;
    Mat hessian(double t, const Vec& x) const override;
    std::string describe() const override;

    static Polynomial zero(int dim) { return Polynomial(dim); }
    static Polynomial constant(int dim, double c);
    /// c * t
    static Polynomial time_linear(int dim, double c);
    /// sum_i x_i^2
    static Polynomial squared_norm(int dim);
    /// kappa * ((t - t0)^2 + |x - x0|^2), a bowl centred at (t0, x0).
    static Polynomial bowl(double t0, const Vec& x0, double kappa);

private:
    int dim_;
    std::vector<Term> terms_;
};

/// Random polynomial of total degree <= max_degree (<= 3) with coefficients
/// uniform in [-scale, scale]; `rng` is advanced.
Polynomial random_polynomial(int dim, int max_degree, double scale, std::mt19937_64& rng);

/// The built-in probing family: `count` polynomials, alternating a random
/// cubic plus a convex bowl and a random cubic minus a convex bowl, with bowl
/// centres drawn inside the given box.
std::vector<Polynomial> polynomial_family(int dim, int count, double t_lo, double t_hi,
                                          const Vec& x_lo, const Vec& x_hi, std::uint64_t seed);

}  // namespace isaacs
