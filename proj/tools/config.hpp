#pragma once

#include "sphtrap/specfun.hpp"

#include "json.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sphtrap::cli {

/// Bad user input; maps to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Command { zeros, transitions, energy, density_r, density_t, propagator_check, selfcheck };

std::string_view command_name(Command c);
Command parse_command(std::string_view name);

/// Uniform grid from min to max inclusive.
struct Grid {
    double min = 0.0;
    double max = 0.0;
    int steps = 2;

    std::vector<double> points() const;
};

struct RunConfig {
    Command command = Command::selfcheck;

    std::vector<double> alpha;
    /// Wall speeds in units of alpha_ln = x_ln / 2 (density commands).
    std::vector<double> alpha_multipliers;
    std::vector<ModeIndex> modes;
    /// Fixed spectral truncation; 0 selects it from target_deficit.
    int n_trunc = 0;
    double target_deficit = 1e-6;
    double max_norm_deficit = 1e-3;

    /// xi runs from xi.max down to xi.min.
    Grid xi{0.3, 1.0, 71};
    /// eta.max = 0 selects the admissible range [0, r0 / lambda].
    Grid eta{0.0, 0.0, 2001};
    /// T.max = 0 selects 3 T2.
    Grid T{0.0, 0.0, 1201};
    int columns = 4;
    double r0 = 2.0;

    int l_max = 50;
    int n_max = 100;
    std::vector<int> kernel_modes;

    // Not part of the reproducibility header.
    std::string output_dir = ".";
    std::string zero_cache;
    bool serial = false;
    bool assert_claims = true;

    /// Assigns one key from its canonical text form. Lists use ';' (',' is
    /// also accepted except inside modes, written "l,n,m").
    void set(std::string_view key, std::string_view value);

    /// Canonical key/value pairs that fully determine the numeric output.
    std::vector<std::pair<std::string, std::string>> entries() const;

    void validate() const;
};

/// Defaults that reproduce the published parameter sets for each command.
RunConfig default_config(Command c);

/// Applies a flat JSON object; values may be numbers, strings, booleans or
/// arrays of these (modes may also be [l, n, m] arrays).
void apply_json(RunConfig& config, const nlohmann::json& object);
void apply_json_file(RunConfig& config, const std::string& path);

} // namespace sphtrap::cli
