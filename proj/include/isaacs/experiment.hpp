#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "isaacs/config.hpp"

namespace isaacs {

/// One row of the run summary.
struct CheckResult {
    std::string id;
    bool passed = false;
    double metric = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct RunOverrides {
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

struct RunSummary {
    std::string out_dir;
    std::vector<CheckResult> checks;

    bool all_passed() const;
};

/// Subcommands accepted by run_experiment.
const std::vector<std::string>& experiment_subcommands();

/// Output directory: --out flag, then $ISAACS_LAB_OUT, then the config's [output] dir.
std::string resolve_out_dir(const ExperimentConfig& cfg, const std::optional<std::string>& flag);

/// Runs one subcommand (value, pde, agree, certify, oracle, all). Each check
/// appends to <out>/summary.csv as soon as it finishes; the human-readable
/// table goes to `log` and <out>/summary.txt at the end.
RunSummary run_experiment(ExperimentConfig cfg, const std::string& subcommand, const RunOverrides& overrides,
                          std::ostream& log);

/// Alphabetised family listing with parameter docs.
void print_games(std::ostream& os);

/// Fixed-width verdict table.
void print_summary_table(const RunSummary& summary, std::ostream& os);

}  // namespace isaacs
