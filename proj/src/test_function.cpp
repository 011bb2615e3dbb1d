#include "isaacs/test_function.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace isaacs {

namespace {

double ipow(double base, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

// prod_i x_i^{k_i} with the exponent of dimension `skip` replaced by `k_skip`.
double monomial(const Vec& x, const std::vector<int>& k, int skip = -1, int k_skip = 0,
                int skip2 = -1, int k_skip2 = 0) {
    double r = 1.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        int e = k[i];
        if (static_cast<int>(i) == skip) e = k_skip;
        if (static_cast<int>(i) == skip2) e = k_skip2;
        r *= ipow(x[static_cast<Eigen::Index>(i)], e);
    }
    return r;
}

}  // namespace

Polynomial& Polynomial::add(double coef, int t_power, std::vector<int> x_powers) {
    if (static_cast<int>(x_powers.size()) != dim_)
        throw std::invalid_argument("Polynomial::add: exponent vector has wrong dimension");
    if (t_power < 0 || std::any_of(x_powers.begin(), x_powers.end(), [](int k) { return k < 0; }))
        throw std::invalid_argument("Polynomial::add: negative exponent");
    if (coef != 0.0) terms_.push_back({coef, t_power, std::move(x_powers)});
    return *this;
}

Polynomial& Polynomial::add(const Polynomial& other, double scale) {
    if (other.dim_ != dim_) throw std::invalid_argument("Polynomial::add: dimension mismatch");
    for (const auto& term : other.terms_) add(scale * term.coef, term.t_power, term.x_powers);
    return *this;
}

int Polynomial::degree() const {
    int d = 0;
    for (const auto& term : terms_)
        d = std::max(d, term.t_power + std::accumulate(term.x_powers.begin(), term.x_powers.end(), 0));
    return d;
}

double Polynomial::value(double t, const Vec& x) const {
    double s = 0.0;
    for (const auto& term : terms_) s += term.coef * ipow(t, term.t_power) * monomial(x, term.x_powers);
    return s;
}

double Polynomial::time_derivative(double t, const Vec& x) const {
    double s = 0.0;
    for (const auto& term : terms_) {
        if (term.t_power == 0) continue;
        s += term.coef * term.t_power * ipow(t, term.t_power - 1) * monomial(x, term.x_powers);
    }
    return s;
}

Vec Polynomial::gradient(double t, const Vec& x) const {
    Vec g = Vec::Zero(dim_);
    for (const auto& term : terms_) {
        const double tt = term.coef * ipow(t, term.t_power);
        for (int i = 0; i < dim_; ++i) {
            const int k = term.x_powers[static_cast<std::size_t>(i)];
            if (k == 0) continue;
            g[i] += tt * k * monomial(x, term.x_powers, i, k - 1);
        }
    }
    return g;
}

Mat Polynomial::hessian(double t, const Vec& x) const {
    Mat h = Mat::Zero(dim_, dim_);
    for (const auto& term : terms_) {
        const double tt = term.coef * ipow(t, term.t_power);
        for (int i = 0; i < dim_; ++i) {
            const int ki = term.x_powers[static_cast<std::size_t>(i)];
            if (ki >= 2) h(i, i) += tt * ki * (ki - 1) * monomial(x, term.x_powers, i, ki - 2);
            for (int j = i + 1; j < dim_; ++j) {
                const int kj = term.x_powers[static_cast<std::size_t>(j)];
                if (ki == 0 || kj == 0) continue;
                const double v = tt * ki * kj * monomial(x, term.x_powers, i, ki - 1, j, kj - 1);
                h(i, j) += v;
                h(j, i) += v;
            }
        }
    }
    return h;
}

std::string Polynomial::describe() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(6);
    for (std::size_t n = 0; n < terms_.size(); ++n) {
        const auto& term = terms_[n];
        os << (n ? " + " : "") << term.coef;
        if (term.t_power) os << "*t^" << term.t_power;
        for (std::size_t i = 0; i < term.x_powers.size(); ++i)
            if (term.x_powers[i]) os << "*x" << i << "^" << term.x_powers[i];
    }
    return os.str();
}

Polynomial Polynomial::constant(int dim, double c) {
    Polynomial p(dim);
    p.add(c, 0, std::vector<int>(static_cast<std::size_t>(dim), 0));
    return p;
}

Polynomial Polynomial::time_linear(int dim, double c) {
    Polynomial p(dim);
    p.add(c, 1, std::vector<int>(static_cast<std::size_t>(dim), 0));
    return p;
}

Polynomial Polynomial::squared_norm(int dim) {
    Polynomial p(dim);
    for (int i = 0; i < dim; ++i) {
        std::vector<int> k(static_cast<std::size_t>(dim), 0);
        k[static_cast<std::size_t>(i)] = 2;
        p.add(1.0, 0, k);
    }
    return p;
}

Polynomial Polynomial::bowl(double t0, const Vec& x0, double kappa) {
    const int dim = static_cast<int>(x0.size());
    const std::vector<int> none(static_cast<std::size_t>(dim), 0);
    Polynomial p(dim);
    // (t - t0)^2
    p.add(kappa, 2, none).add(-2.0 * kappa * t0, 1, none).add(kappa * t0 * t0, 0, none);
    for (int i = 0; i < dim; ++i) {
        std::vector<int> k1 = none, k2 = none;
        k1[static_cast<std::size_t>(i)] = 1;
        k2[static_cast<std::size_t>(i)] = 2;
        p.add(kappa, 0, k2).add(-2.0 * kappa * x0[i], 0, k1).add(kappa * x0[i] * x0[i], 0, none);
    }
    return p;
}

Polynomial random_polynomial(int dim, int max_degree, double scale, std::mt19937_64& rng) {
    if (max_degree < 0 || max_degree > 3)
        throw std::invalid_argument("random_polynomial: degree must be in [0, 3]");
    std::uniform_real_distribution<double> coef(-scale, scale);
    Polynomial p(dim);
    // Enumerate all exponent tuples over (t, x_1..x_n) with total degree <= max_degree.
    std::vector<int> e(static_cast<std::size_t>(dim + 1), 0);
    while (true) {
        const int total = std::accumulate(e.begin(), e.end(), 0);
        if (total <= max_degree) p.add(coef(rng), e[0], std::vector<int>(e.begin() + 1, e.end()));
        std::size_t i = 0;
        while (i < e.size()) {
            if (++e[i] <= max_degree) break;
            e[i] = 0;
            ++i;
        }
        if (i == e.size()) break;
    }
    return p;
}

std::vector<Polynomial> polynomial_family(int dim, int count, double t_lo, double t_hi,
                                          const Vec& x_lo, const Vec& x_hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Polynomial> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        Polynomial p = random_polynomial(dim, 3, 0.05, rng);
        const double t0 = t_lo + (t_hi - t_lo) * unit(rng);
        Vec x0(dim);
        for (int i = 0; i < dim; ++i) x0[i] = x_lo[i] + (x_hi[i] - x_lo[i]) * unit(rng);
        const double kappa = 2.0 + 8.0 * unit(rng);
        p.add(Polynomial::bowl(t0, x0, kappa), (n % 2 == 0) ? 1.0 : -1.0);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace isaacs
