#include "config.hpp"

#include "sphtrap/errors.hpp"
#include "sphtrap/numfmt.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sphtrap::cli {

namespace {

struct CommandEntry {
    Command command;
    std::string_view name;
};

constexpr CommandEntry kCommands[] = {
    {Command::zeros, "zeros"},
    {Command::transitions, "transitions"},
    {Command::energy, "energy"},
    {Command::density_r, "density-r"},
    {Command::density_t, "density-t"},
    {Command::propagator_check, "propagator-check"},
    {Command::selfcheck, "selfcheck"},
};

std::vector<std::string_view> split(std::string_view text, char sep)
{
    std::vector<std::string_view> out;
    if (text.empty())
        return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> split_list(std::string_view text)
{
    return split(text, text.find(';') != std::string_view::npos ? ';' : ',');
}

double to_double(std::string_view key, std::string_view text)
{
    try {
        return parse_double(text);
    } catch (const std::invalid_argument&) {
        throw ConfigError("config key '" + std::string(key) + "': '" + std::string(text) + "' is not a number");
    }
}

int to_int(std::string_view key, std::string_view text)
{
    try {
        return parse_int(text);
    } catch (const std::invalid_argument&) {
        throw ConfigError("config key '" + std::string(key) + "': '" + std::string(text) + "' is not an integer");
    }
}

bool to_bool(std::string_view key, std::string_view text)
{
    if (text == "true" || text == "1")
        return true;
    if (text == "false" || text == "0")
        return false;
    throw ConfigError("config key '" + std::string(key) + "': expected true or false");
}

ModeIndex to_mode(std::string_view text)
{
    const auto parts = split(text, ',');
    if (parts.size() != 3)
        throw ConfigError("mode '" + std::string(text) + "' must be written l,n,m");
    try {
        return ModeIndex(to_int("modes", parts[0]), to_int("modes", parts[1]), to_int("modes", parts[2]));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("mode ") + e.what());
    }
}

std::string join_doubles(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ";" : "") + format_shortest(v[i]);
    return s;
}

std::string join_ints(const std::vector<int>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
}

std::string join_modes(const std::vector<ModeIndex>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ";" : "") + std::to_string(v[i].l) + "," + std::to_string(v[i].n) + "," + std::to_string(v[i].m);
    return s;
}

void check_grid(const char* name, const Grid& g, bool auto_max)
{
    if (!std::isfinite(g.min) || !std::isfinite(g.max))
        throw ConfigError(std::string(name) + " grid bounds must be finite");
    if (g.steps < 2)
        throw ConfigError(std::string(name) + "_steps must be >= 2");
    if (!(g.max > g.min) && !(auto_max && g.max == 0.0))
        throw ConfigError(std::string(name) + "_max must exceed " + name + "_min");
}

/// JSON scalar to the canonical text accepted by RunConfig::set.
std::string scalar_text(const std::string& key, const nlohmann::json& v)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_boolean())
        return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer())
        return std::to_string(v.get<long long>());
    if (v.is_number())
        return format_shortest(v.get<double>());
    throw ConfigError("config key '" + key + "' has an unsupported value type");
}

} // namespace

std::string_view command_name(Command c)
{
    for (const auto& e : kCommands)
        if (e.command == c)
            return e.name;
    return "unknown";
}

Command parse_command(std::string_view name)
{
    for (const auto& e : kCommands)
        if (e.name == name)
            return e.command;
    throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::vector<double> Grid::points() const
{
    std::vector<double> p(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        p[static_cast<std::size_t>(i)] = i + 1 == steps ? max : min + (max - min) * i / (steps - 1);
    return p;
}

void RunConfig::set(std::string_view key, std::string_view value)
{
    auto doubles = [&] {
        std::vector<double> out;
        for (auto part : split_list(value))
            out.push_back(to_double(key, part));
        return out;
    };
    if (key == "command")
        command = parse_command(value);
    else if (key == "alpha")
        alpha = doubles();
    else if (key == "alpha_multipliers")
        alpha_multipliers = doubles();
    else if (key == "modes") {
        modes.clear();
        for (auto part : split(value, ';'))
            modes.push_back(to_mode(part));
    } else if (key == "n_trunc")
        n_trunc = to_int(key, value);
    else if (key == "target_deficit")
        target_deficit = to_double(key, value);
    else if (key == "max_norm_deficit")
        max_norm_deficit = to_double(key, value);
    else if (key == "xi_min")
        xi.min = to_double(key, value);
    else if (key == "xi_max")
        xi.max = to_double(key, value);
    else if (key == "xi_steps")
        xi.steps = to_int(key, value);
    else if (key == "eta_min")
        eta.min = to_double(key, value);
    else if (key == "eta_max")
        eta.max = to_double(key, value);
    else if (key == "eta_steps")
        eta.steps = to_int(key, value);
    else if (key == "T_min")
        T.min = to_double(key, value);
    else if (key == "T_max")
        T.max = to_double(key, value);
    else if (key == "T_steps")
        T.steps = to_int(key, value);
    else if (key == "columns")
        columns = to_int(key, value);
    else if (key == "r0")
        r0 = to_double(key, value);
    else if (key == "l_max")
        l_max = to_int(key, value);
    else if (key == "n_max")
        n_max = to_int(key, value);
    else if (key == "kernel_modes") {
        kernel_modes.clear();
        for (auto part : split_list(value))
            kernel_modes.push_back(to_int(key, part));
    } else if (key == "output_dir")
        output_dir = std::string(value);
    else if (key == "zero_cache")
        zero_cache = std::string(value);
    else if (key == "serial")
        serial = to_bool(key, value);
    else if (key == "assert_claims")
        assert_claims = to_bool(key, value);
    else
        throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const
{
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("command", std::string(command_name(command)));
    e.emplace_back("alpha", join_doubles(alpha));
    e.emplace_back("alpha_multipliers", join_doubles(alpha_multipliers));
    e.emplace_back("modes", join_modes(modes));
    e.emplace_back("n_trunc", std::to_string(n_trunc));
    e.emplace_back("target_deficit", format_shortest(target_deficit));
    e.emplace_back("max_norm_deficit", format_shortest(max_norm_deficit));
    e.emplace_back("xi_min", format_shortest(xi.min));
    e.emplace_back("xi_max", format_shortest(xi.max));
    e.emplace_back("xi_steps", std::to_string(xi.steps));
    e.emplace_back("eta_min", format_shortest(eta.min));
    e.emplace_back("eta_max", format_shortest(eta.max));
    e.emplace_back("eta_steps", std::to_string(eta.steps));
    e.emplace_back("T_min", format_shortest(T.min));
    e.emplace_back("T_max", format_shortest(T.max));
    e.emplace_back("T_steps", std::to_string(T.steps));
    e.emplace_back("columns", std::to_string(columns));
    e.emplace_back("r0", format_shortest(r0));
    e.emplace_back("l_max", std::to_string(l_max));
    e.emplace_back("n_max", std::to_string(n_max));
    e.emplace_back("kernel_modes", join_ints(kernel_modes));
    e.emplace_back("assert_claims", assert_claims ? "true" : "false");
    return e;
}

void RunConfig::validate() const
{
    for (double a : alpha)
        if (!std::isfinite(a))
            throw ConfigError("alpha values must be finite");
    for (double a : alpha_multipliers)
        if (!std::isfinite(a) || a < 0.0)
            throw ConfigError("alpha_multipliers must be finite and >= 0");
    if (n_trunc < 0)
        throw ConfigError("n_trunc must be >= 0 (0 selects it automatically)");
    if (!(target_deficit > 0.0) || !(max_norm_deficit > 0.0))
        throw ConfigError("deficit tolerances must be positive");
    if (columns < 1)
        throw ConfigError("columns must be >= 1");
    if (!(r0 > 0.0) || !std::isfinite(r0))
        throw ConfigError("r0 must be positive");
    if (l_max < 0 || l_max > kMaxBesselOrder || n_max < 1)
        throw ConfigError("zero table needs 0 <= l_max <= 256 and n_max >= 1");
    for (int k : kernel_modes)
        if (k < 1)
            throw ConfigError("kernel_modes entries must be >= 1");
    check_grid("xi", xi, false);
    check_grid("eta", eta, true);
    check_grid("T", T, true);
    if (xi.min <= 0.0)
        throw ConfigError("xi_min must be positive");

    auto need = [&](bool ok, const char* what) {
        if (!ok)
            throw ConfigError(std::string(command_name(command)) + ": " + what);
    };
    switch (command) {
    case Command::transitions:
    case Command::energy:
        need(!alpha.empty(), "needs at least one alpha");
        need(modes.size() == 1, "needs exactly one initial mode");
        need(n_trunc >= 1, "needs n_trunc >= 1");
        if (command == Command::transitions)
            need(columns <= n_trunc, "columns must not exceed n_trunc");
        break;
    case Command::density_r:
    case Command::density_t:
        need(!alpha_multipliers.empty(), "needs at least one alpha multiplier");
        need(!modes.empty(), "needs at least one mode");
        if (command == Command::density_r)
            need(modes.size() == 1, "needs exactly one initial mode");
        need(r0 > 1.0, "needs r0 beyond the initial wall (r0 > 1)");
        need(eta.min >= 0.0 && T.min >= 0.0, "grids must start at or after zero");
        if (command == Command::density_t)
            for (double a : alpha_multipliers)
                need(a > 0.0, "the wall must expand (multipliers > 0)");
        break;
    case Command::propagator_check:
        need(!alpha.empty(), "needs at least one alpha");
        need(!kernel_modes.empty(), "needs at least one kernel truncation");
        break;
    case Command::zeros:
    case Command::selfcheck:
        break;
    }
}

RunConfig default_config(Command c)
{
    RunConfig cfg;
    cfg.command = c;
    switch (c) {
    case Command::zeros:
        break;
    case Command::transitions:
        cfg.alpha = {-2.0, -4.0, -6.0, -10.0};
        cfg.modes = {ModeIndex(1, 1, 0)};
        cfg.n_trunc = 10;
        break;
    case Command::energy:
        cfg.alpha = {-2.0, -4.0, -6.0};
        cfg.modes = {ModeIndex(1, 1, 0)};
        cfg.n_trunc = 15;
        break;
    case Command::density_r:
        cfg.alpha_multipliers = {0.0, 0.01, 1.0, 10.0, 15.0, 20.0};
        cfg.modes = {ModeIndex(0, 5, 0)};
        break;
    case Command::density_t:
        cfg.alpha_multipliers = {0.9, 1.0, 2.0};
        cfg.modes = {ModeIndex(0, 15, 0), ModeIndex(0, 100, 0)};
        break;
    case Command::propagator_check:
        cfg.alpha = {-2.0, 0.0, 0.5, 4.0};
        cfg.kernel_modes = {200};
        break;
    case Command::selfcheck:
        break;
    }
    return cfg;
}

void apply_json(RunConfig& config, const nlohmann::json& object)
{
    if (!object.is_object())
        throw ConfigError("config file must hold a flat JSON object");
    for (const auto& [key, value] : object.items()) {
        if (value.is_array()) {
            std::string joined;
            for (std::size_t i = 0; i < value.size(); ++i) {
                const auto& item = value[i];
                std::string text;
                if (item.is_array()) {
                    for (std::size_t j = 0; j < item.size(); ++j)
                        text += (j ? "," : "") + scalar_text(key, item[j]);
                } else {
                    text = scalar_text(key, item);
                }
                joined += (i ? ";" : "") + text;
            }
            config.set(key, joined);
        } else if (value.is_object()) {
            throw ConfigError("config key '" + key + "' must not be nested");
        } else {
            config.set(key, scalar_text(key, value));
        }
    }
}

void apply_json_file(RunConfig& config, const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    apply_json(config, j);
}

} // namespace sphtrap::cli
