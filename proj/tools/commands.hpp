#pragma once

#include "config.hpp"

#include "sphtrap/execution.hpp"
#include "sphtrap/specfun.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sphtrap::cli {

/// Invariants always gate the exit code, claims gate it unless
/// assert_claims is off, diagnostics are reported only.
enum class CheckKind { invariant, claim, diagnostic };

struct CheckResult {
    std::string name;
    CheckKind kind = CheckKind::invariant;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

std::string_view kind_name(CheckKind kind);
/// "PASS|FAIL kind name measured=... tolerance=... detail".
std::string describe(const CheckResult& check);

struct CommandReport {
    std::vector<std::string> files;
    std::vector<CheckResult> checks;
    bool assert_claims = true;

    void add(CheckResult check) { checks.push_back(std::move(check)); }
    bool all_passed() const;
    /// 0 on success, 1 if an invariant (or an asserted claim) failed.
    int exit_code() const;
};

/// Runs one command; data goes to files under config.output_dir, progress
/// and check lines to `log`. Throws ConfigError for unusable settings.
CommandReport run_command(const RunConfig& config, std::ostream& log);

/// Re-runs the configuration recorded in the header of a CSV written by
/// this tool, writing into `output_dir`.
CommandReport rerun_from_csv(const std::string& csv_path, const std::string& output_dir, bool serial,
                             std::ostream& log);

/// Zero table for (0..l_max, 1..n_max), read from and written to
/// config.zero_cache when set. A cache that fails revalidation throws
/// ValidationError.
BesselZeroTable obtain_zero_table(const RunConfig& config, int l_max, int n_max, std::ostream& log);

/// Propagator invariants (1D equivalence, static box, mode fidelity,
/// composition, norm) for one wall speed and truncation.
std::vector<CheckResult> propagator_checks(double alpha, int n_max, Execution exec);

} // namespace sphtrap::cli
