#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace isaacs {

/// One `key = value` entry with its source position.
struct IniEntry {
    std::string key;
    std::string value;
    int line = 0;
    int column = 0;        ///< column of the key
    int value_column = 0;  ///< column of the value
};

struct IniSection {
    std::string name;
    int line = 0;
    std::vector<IniEntry> entries;
};

/// Flat INI: `[section]` headers, `key = value` lines, `#` or `;` comments.
/// Throws ConfigError with line/column on malformed input or duplicate keys.
std::vector<IniSection> parse_ini(const std::string& text);

/// Everything an experiment run needs. Defaults are documented in README.
struct ExperimentConfig {
    std::string path;

    // [game]
    std::string family;
    std::map<std::string, double> params;
    std::optional<std::vector<double>> u_points;
    std::optional<std::vector<double>> v_points;

    // [grids]
    std::vector<double> x_min{-2.0};
    std::vector<double> x_max{2.0};
    std::vector<int> nodes{81};
    std::string boundary = "clamp";
    double t0 = 0.0;
    std::optional<double> t1;  ///< defaults to the horizon
    int steps = 100;
    int pde_steps = 0;         ///< 0: smallest stable count, at least `steps`
    std::vector<double> x0{0.0};

    // [run]
    std::uint64_t seed = 1;
    int threads = 0;
    double budget = 1e6;
    double window = 0.25;               ///< central axis fraction compared and probed
    double agreement_tolerance = 5e-2;
    double agreement_ratio = 4.0 / 3.0;
    double exact_floor = 1e-10;
    double order_tolerance = 1e-12;
    std::optional<double> reference_lower;
    std::optional<double> reference_upper;
    double reference_tolerance = 1e-6;
    int probe_count = 50;
    double probe_c = 10.0;
    double holder_min = 0.4;
    double lipschitz_growth = 1.5;
    std::vector<double> certify_deltas{0.2, 0.1, 0.05, 0.025};
    int certify_steps = 8;
    int supinf_steps = 3;
    std::vector<double> certify_x;  ///< defaults to x0
    std::string certify_phi = "squared_norm";
    double rate_min_slope = 1.4;
    int oracle_instances = 20;
    int oracle_steps = 2;
    double oracle_tolerance = 1e-10;
    int bsde_instances = 100;
    int bsde_steps = 6;
    int identity_instances = 50;
    int supinf_instances = 20;
    double ode_tolerance = 1e-9;

    // [output]
    std::string out_dir = "isaacs-lab-out";
    bool write_binary = false;

    double end_time(double horizon) const { return t1 ? *t1 : horizon; }
};

/// Reads and validates a config file. Throws ConfigError("config not found: ...")
/// for a missing file and ConfigError with line/column for content problems.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& path = "<string>");

}  // namespace isaacs
