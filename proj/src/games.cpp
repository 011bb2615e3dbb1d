#include "isaacs/games.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isaacs {

namespace {

struct Family {
    GameFamilyInfo info;
    GameInstance (*build)(const std::map<std::string, double>&);
};

double param(const std::map<std::string, double>& p, const char* name) { return p.at(name); }

GameInstance bilinear(const std::map<std::string, double>& p) {
    const double a = param(p, "a");
    const double sigma = param(p, "sigma");
    GameInstance g;
    g.spec.horizon = param(p, "horizon");
    g.spec.drift = [](double, const Vec&, Control, Control) { return Vec::Zero(1).eval(); };
    g.spec.diffusion = [sigma](double, const Vec&, Control, Control) {
        return Mat::Constant(1, 1, sigma).eval();
    };
    g.spec.driver = [a](double, const Vec&, double, const Vec&, Control u, Control v) {
        return a * u * v;
    };
    g.spec.terminal = [](const Vec&) { return 0.0; };
    g.spec.lipschitz_const = std::max(1.0, std::abs(a));
    g.spec.driver_yz_lipschitz = 0.0;
    g.controls = {{-1.0, 1.0}, {-1.0, 1.0}};
    return g;
}

GameInstance cancellation(const std::map<std::string, double>& p) {
    const double sigma = param(p, "sigma");
    GameInstance g;
    g.spec.horizon = param(p, "horizon");
    g.spec.drift = [](double, const Vec&, Control u, Control v) {
        return Vec::Constant(1, u + v).eval();
    };
    g.spec.diffusion = [sigma](double, const Vec&, Control, Control) {
        return Mat::Constant(1, 1, sigma).eval();
    };
    g.spec.driver = [](double, const Vec&, double, const Vec&, Control, Control) { return 0.0; };
    g.spec.terminal = [](const Vec& x) { return x[0]; };
    g.spec.lipschitz_const = 1.0;
    g.spec.driver_yz_lipschitz = 0.0;
    g.controls = {{-1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0}};
    return g;
}

GameInstance constants(const std::map<std::string, double>& p) {
    const double k = param(p, "k");
    const double sigma = param(p, "sigma");
    GameInstance g;
    g.spec.horizon = param(p, "horizon");
    g.spec.drift = [](double, const Vec&, Control, Control) { return Vec::Zero(1).eval(); };
    g.spec.diffusion = [sigma](double, const Vec&, Control, Control) {
        return Mat::Constant(1, 1, sigma).eval();
    };
    g.spec.driver = [](double, const Vec&, double, const Vec&, Control, Control) { return 0.0; };
    g.spec.terminal = [k](const Vec&) { return k; };
    g.spec.lipschitz_const = std::max(1.0, std::abs(k));
    g.spec.driver_yz_lipschitz = 0.0;
    g.controls = {{-1.0, 1.0}, {-1.0, 1.0}};
    return g;
}

GameInstance discounted(const std::map<std::string, double>& p) {
    const double r = param(p, "r");
    const double a = param(p, "a");
    const double sigma = param(p, "sigma");
    GameInstance g;
    g.spec.horizon = param(p, "horizon");
    g.spec.drift = [](double, const Vec&, Control, Control) { return Vec::Zero(1).eval(); };
    g.spec.diffusion = [sigma](double, const Vec&, Control, Control) {
        return Mat::Constant(1, 1, sigma).eval();
    };
    g.spec.driver = [r, a](double, const Vec&, double y, const Vec&, Control u, Control v) {
        return -r * y + a * u * v;
    };
    g.spec.terminal = [](const Vec&) { return 0.0; };
    g.spec.lipschitz_const = std::max({1.0, std::abs(r), std::abs(a)});
    g.spec.driver_yz_lipschitz = std::abs(r);
    g.controls = {{-1.0, 1.0}, {-1.0, 1.0}};
    return g;
}

GameInstance heat(const std::map<std::string, double>& p) {
    const int n = static_cast<int>(param(p, "dim"));
    if (n < 1 || n > 3) throw std::invalid_argument("heat: dim must be 1, 2 or 3");
    const double sigma = param(p, "sigma");
    const double rho = param(p, "rho");
    const int power = static_cast<int>(param(p, "terminal_power"));
    if (power != 1 && power != 2) throw std::invalid_argument("heat: terminal_power must be 1 or 2");
    if (std::abs(rho) >= 1.0) throw std::invalid_argument("heat: |rho| must be < 1");
    // sigma * L with L the Cholesky factor of the correlation matrix (rho off-diagonal).
    Mat corr = Mat::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) corr(i, j) = rho;
    const Mat root = sigma * Mat(corr.llt().matrixL());
    GameInstance g;
    g.spec.dim_state = n;
    g.spec.dim_noise = n;
    g.spec.horizon = param(p, "horizon");
    g.spec.drift = [n](double, const Vec&, Control, Control) { return Vec::Zero(n).eval(); };
    g.spec.diffusion = [root](double, const Vec&, Control, Control) { return root; };
    g.spec.driver = [](double, const Vec&, double, const Vec&, Control, Control) { return 0.0; };
    if (power == 2)
        g.spec.terminal = [](const Vec& x) { return x.squaredNorm(); };
    else
        g.spec.terminal = [](const Vec& x) { return x.sum(); };
    g.spec.lipschitz_const = 1.0 + sigma;
    g.spec.driver_yz_lipschitz = 0.0;
    g.controls = {{0.0}, {0.0}};
    return g;
}

GameInstance sine_drift(const std::map<std::string, double>& p) {
    const double coupling = param(p, "coupling");
    GameInstance g;
    g.spec.horizon = param(p, "horizon");
    g.spec.drift = [](double, const Vec& x, Control, Control) {
        return Vec::Constant(1, std::sin(x[0])).eval();
    };
    g.spec.diffusion = [](double, const Vec& x, Control, Control) {
        const double s = x[0] * x[0];
        return Mat::Constant(1, 1, 1.0 + 0.5 * s / (1.0 + s)).eval();
    };
    g.spec.driver = [coupling](double, const Vec&, double, const Vec&, Control u, Control v) {
        return coupling * u * v;
    };
    g.spec.terminal = [](const Vec&) { return 0.0; };
    g.spec.lipschitz_const = std::max(1.5, std::abs(coupling));
    g.spec.driver_yz_lipschitz = 0.0;
    g.controls = {{-1.0, 1.0}, {-1.0, 1.0}};
    return g;
}

const std::vector<Family>& registry() {
    static const std::vector<Family> families = {
        {{"bilinear",
          "no-value game: b=0, sigma const, f=a*u*v, Phi=0, U=V={-1,1}; W=-|a|(T-t), U=+|a|(T-t)",
          {{"a", 4.0, "driver coefficient"}, {"sigma", 1.0, "diffusion"}, {"horizon", 1.0, "T"}}},
         &bilinear},
        {{"cancellation",
          "Isaacs condition holds: b=u+v, sigma const, f=0, Phi(x)=x, U=V={-1,0,1}; W=U=x",
          {{"sigma", 0.5, "diffusion"}, {"horizon", 1.0, "T"}}},
         &cancellation},
        {{"constants", "b=0, f=0, Phi=k, U=V={-1,1}; W=U=k",
          {{"k", 1.0, "terminal constant"}, {"sigma", 0.0, "diffusion"}, {"horizon", 1.0, "T"}}},
         &constants},
        {{"discounted", "b=0, sigma const, f=-r*y+a*u*v, Phi=0, U=V={-1,1}",
          {{"r", 1.0, "discount rate"}, {"a", 1.0, "coupling"}, {"sigma", 1.0, "diffusion"},
           {"horizon", 1.0, "T"}}},
         &discounted},
        {{"heat",
          "single-player degenerate: b=0, sigma*L (L Cholesky of rho-correlation), f=0, "
          "Phi=|x|^2 or sum(x); single-point controls",
          {{"dim", 1.0, "state dimension (1-3)"}, {"sigma", 1.0, "diffusion scale"},
           {"rho", 0.0, "noise correlation"}, {"terminal_power", 2.0, "1: sum(x), 2: |x|^2"},
           {"horizon", 1.0, "T"}}},
         &heat},
        {{"sine_drift",
          "state-dependent coefficients: b=sin x, sigma=1+0.5x^2/(1+x^2), f=coupling*u*v, Phi=0",
          {{"coupling", 0.0, "driver coefficient"}, {"horizon", 1.0, "T"}}},
         &sine_drift},
    };
    return families;
}

}  // namespace

std::vector<GameFamilyInfo> list_games() {
    std::vector<GameFamilyInfo> out;
    for (const auto& f : registry()) out.push_back(f.info);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

GameInstance make_game(const std::string& family, const std::map<std::string, double>& params) {
    for (const auto& f : registry()) {
        if (f.info.name != family) continue;
        std::map<std::string, double> full;
        for (const auto& doc : f.info.params) full[doc.name] = doc.default_value;
        for (const auto& [k, v] : params) {
            if (!full.count(k))
                throw std::invalid_argument("game family '" + family + "' has no parameter '" + k + "'");
            full[k] = v;
        }
        GameInstance g = f.build(full);
        g.family = family;
        g.params = full;
        g.spec.validate();
        g.controls.validate();
        return g;
    }
    throw std::invalid_argument("unknown game family '" + family + "'");
}

}  // namespace isaacs
