#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "isaacs/bsde.hpp"
#include "isaacs/certify.hpp"
#include "isaacs/games.hpp"
#include "isaacs/value_field.hpp"

namespace isaacs {

/// A small game whose binomial children land exactly on grid nodes:
/// b = (h/dt) m(u,v), sigma = s(u,v) h / sqrt(dt) with integer tables m, s, so
/// value iteration and the literal tree enumeration share every state.
struct AlignedInstance {
    GameInstance game;
    StateGrid sgrid;
    TimeGrid tgrid;
    Vec x0;
};

/// 1 or 2 steps, |U|, |V| <= 3 (2 x 2 for two steps), n = d = 1, driver linear
/// in (y, z) with a monotone one-step operator.
AlignedInstance random_aligned_instance(std::mt19937_64& rng);

/// Aggregate of a seeded family of checks.
struct CampaignReport {
    std::string name;
    int instances = 0;
    int failures = 0;
    double worst = 0.0;      ///< largest observed gap or violation measure
    double tolerance = 0.0;
    std::string note;

    bool passed() const { return instances > 0 && failures == 0; }
};

/// Value iteration root vs brute force, lower and upper, on random aligned instances.
CampaignReport dpp_bruteforce_campaign(int instances, std::uint64_t seed, double tol = 1e-10,
                                       double budget = 1e6);

/// Sampling region and lattice for BSDE campaigns on a fixed game.
struct BsdeCampaignSetup {
    const GameInstance* game = nullptr;
    double t0 = 0.0;
    double t1 = 1.0;
    int steps = 6;  ///< full binomial tree
    Vec x_lo;
    Vec x_hi;
};

/// Ordered terminal data and drivers: zero violations of y1 >= y2 - 1e-10.
CampaignReport comparison_campaign(const BsdeCampaignSetup& setup, int instances, std::uint64_t seed);

/// A-priori estimate with beta = 16(1 + C^2) for random perturbation pairs.
CampaignReport stability_campaign(const BsdeCampaignSetup& setup, int instances, std::uint64_t seed);

/// G_{t,T}[Phi] = G_{t,t+delta}[Y_{t+delta}] at random split steps, tolerance 1e-10.
CampaignReport semigroup_campaign(const BsdeCampaignSetup& setup, int instances, std::uint64_t seed);

/// Localisation identity on random windows with random cubic test functions.
CampaignReport identity_campaign(const BsdeCampaignSetup& setup, const std::vector<double>& deltas,
                                 int window_steps, int instances, std::uint64_t seed);

/// Sup-inf enumeration against the backward ODE on random windows; instances
/// over budget are refused (counted as failures with the refusal message).
CampaignReport supinf_campaign(const BsdeCampaignSetup& setup, const Polynomial& phi,
                               const std::vector<double>& deltas, int window_steps, int instances,
                               std::uint64_t seed, double budget = 1e6);

/// Worst halved-tolerance self-check of the backward ODE over the same windows.
CampaignReport ode_selfcheck_campaign(const BsdeCampaignSetup& setup, const Polynomial& phi,
                                      const std::vector<double>& deltas, int window_steps,
                                      int instances, std::uint64_t seed, double tol = 1e-9);

}  // namespace isaacs
