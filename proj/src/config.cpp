#include "isaacs/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "isaacs/error.hpp"
#include "isaacs/games.hpp"

namespace isaacs {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// Index of the first non-blank character at or after `from`, or npos.
std::size_t skip_blank(const std::string& s, std::size_t from) {
    while (from < s.size() && is_space(s[from])) ++from;
    return from < s.size() ? from : std::string::npos;
}

std::string rtrim(std::string s) {
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
}

// Strips an inline comment introduced by " #" or " ;".
std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((s[i] == '#' || s[i] == ';') && (i == 0 || is_space(s[i - 1]))) return s.substr(0, i);
    }
    return s;
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '.' || c == '-';
        if (!ok) return false;
    }
    return true;
}

}  // namespace

std::vector<IniSection> parse_ini(const std::string& text) {
    std::vector<IniSection> sections;
    std::set<std::string> section_names;
    std::set<std::string> keys;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t first = skip_blank(raw, 0);
        if (first == std::string::npos || raw[first] == '#' || raw[first] == ';') continue;
        const int col = static_cast<int>(first) + 1;

        if (raw[first] == '[') {
            const std::string body = rtrim(strip_comment(raw));
            const std::size_t close = body.find(']', first);
            if (close == std::string::npos)
                throw ConfigError("unterminated section header", line_no, col);
            if (close + 1 != body.size())
                throw ConfigError("unexpected text after section header", line_no,
                                  static_cast<int>(close) + 2);
            std::string name = body.substr(first + 1, close - first - 1);
            const std::size_t a = skip_blank(name, 0);
            name = a == std::string::npos ? "" : rtrim(name.substr(a));
            if (!valid_key(name)) throw ConfigError("invalid section name", line_no, col + 1);
            if (!section_names.insert(name).second)
                throw ConfigError("duplicate section [" + name + "]", line_no, col);
            sections.push_back({name, line_no, {}});
            keys.clear();
            continue;
        }

        const std::size_t eq = raw.find('=', first);
        if (eq == std::string::npos) throw ConfigError("expected key = value", line_no, col);
        if (sections.empty()) throw ConfigError("key outside of any section", line_no, col);
        const std::string key = rtrim(raw.substr(first, eq - first));
        if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'", line_no, col);
        if (!keys.insert(key).second)
            throw ConfigError("duplicate key '" + key + "' in [" + sections.back().name + "]", line_no, col);

        const std::string rest = strip_comment(raw.substr(eq + 1));
        const std::size_t vstart = skip_blank(rest, 0);
        IniEntry entry;
        entry.key = key;
        entry.line = line_no;
        entry.column = col;
        if (vstart == std::string::npos) {
            entry.value_column = static_cast<int>(eq) + 2;
        } else {
            entry.value = rtrim(rest.substr(vstart));
            entry.value_column = static_cast<int>(eq + 1 + vstart) + 1;
        }
        if (entry.value.empty()) throw ConfigError("empty value for '" + key + "'", line_no, entry.value_column);
        sections.back().entries.push_back(std::move(entry));
    }
    return sections;
}

namespace {

double to_double(const IniEntry& e, const std::string& token, int column) {
    double v = 0.0;
    const char* b = token.data();
    const char* end = b + token.size();
    const auto [ptr, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError("'" + e.key + "': expected a number, got '" + token + "'", e.line, column);
    return v;
}

std::vector<double> to_list(const IniEntry& e) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= e.value.size()) {
        std::size_t comma = e.value.find(',', pos);
        if (comma == std::string::npos) comma = e.value.size();
        std::string token = e.value.substr(pos, comma - pos);
        const std::size_t a = skip_blank(token, 0);
        const int column = e.value_column + static_cast<int>(pos + (a == std::string::npos ? 0 : a));
        if (a == std::string::npos) throw ConfigError("'" + e.key + "': empty list element", e.line, column);
        token = rtrim(token.substr(a));
        out.push_back(to_double(e, token, column));
        pos = comma + 1;
    }
    return out;
}

double to_number(const IniEntry& e) { return to_double(e, e.value, e.value_column); }

int to_int(const IniEntry& e) {
    const double v = to_number(e);
    if (v != std::floor(v) || std::fabs(v) > 1e9)
        throw ConfigError("'" + e.key + "': expected an integer", e.line, e.value_column);
    return static_cast<int>(v);
}

std::vector<int> to_int_list(const IniEntry& e) {
    std::vector<int> out;
    for (double v : to_list(e)) {
        if (v != std::floor(v) || std::fabs(v) > 1e9)
            throw ConfigError("'" + e.key + "': expected integers", e.line, e.value_column);
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::uint64_t to_u64(const IniEntry& e) {
    std::uint64_t v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto [ptr, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("'" + e.key + "': expected an unsigned 64-bit integer", e.line, e.value_column);
    return v;
}

void require_positive(const IniEntry& e, double v) {
    if (!(v > 0.0)) throw ConfigError("'" + e.key + "' must be positive", e.line, e.value_column);
}

// Applies a handler per known key; unknown keys are errors.
using Handler = std::function<void(const IniEntry&)>;

void dispatch(const IniSection& section, const std::map<std::string, Handler>& handlers) {
    for (const IniEntry& e : section.entries) {
        const auto it = handlers.find(e.key);
        if (it == handlers.end())
            throw ConfigError("unknown key '" + e.key + "' in [" + section.name + "]", e.line, e.column);
        it->second(e);
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& path) {
    const std::vector<IniSection> sections = parse_ini(text);
    ExperimentConfig cfg;
    cfg.path = path;

    const IniSection* game = nullptr;
    for (const IniSection& s : sections) {
        if (s.name == "game") game = &s;
        else if (s.name != "grids" && s.name != "run" && s.name != "output")
            throw ConfigError("unknown section [" + s.name + "]", s.line, 1);
    }
    if (!game) throw ConfigError("missing [game] section");

    // Positions for validation messages after all keys are read.
    std::map<std::string, const IniEntry*> where;
    const IniEntry* family_entry = nullptr;

    for (const IniEntry& e : game->entries) {
        where["game." + e.key] = &e;
        if (e.key == "family") {
            cfg.family = e.value;
            family_entry = &e;
        } else if (e.key == "u_points") {
            cfg.u_points = to_list(e);
        } else if (e.key == "v_points") {
            cfg.v_points = to_list(e);
        } else {
            cfg.params[e.key] = to_number(e);
        }
    }
    if (!family_entry) throw ConfigError("[game] needs a 'family' key", game->line, 1);

    for (const IniSection& s : sections) {
        for (const IniEntry& e : s.entries) where[s.name + "." + e.key] = &e;
        if (s.name == "grids") {
            dispatch(s, {
                {"x_min", [&](const IniEntry& e) { cfg.x_min = to_list(e); }},
                {"x_max", [&](const IniEntry& e) { cfg.x_max = to_list(e); }},
                {"nodes", [&](const IniEntry& e) { cfg.nodes = to_int_list(e); }},
                {"boundary", [&](const IniEntry& e) {
                     if (e.value != "clamp" && e.value != "extrapolate")
                         throw ConfigError("'boundary' must be clamp or extrapolate", e.line, e.value_column);
                     cfg.boundary = e.value;
                 }},
                {"t0", [&](const IniEntry& e) { cfg.t0 = to_number(e); }},
                {"t1", [&](const IniEntry& e) { cfg.t1 = to_number(e); }},
                {"steps", [&](const IniEntry& e) { cfg.steps = to_int(e); require_positive(e, cfg.steps); }},
                {"pde_steps", [&](const IniEntry& e) {
                     cfg.pde_steps = to_int(e);
                     if (cfg.pde_steps < 0) throw ConfigError("'pde_steps' must be >= 0", e.line, e.value_column);
                 }},
                {"x0", [&](const IniEntry& e) { cfg.x0 = to_list(e); }},
            });
        } else if (s.name == "run") {
            auto positive = [](double& slot) {
                return [&slot](const IniEntry& e) { slot = to_number(e); require_positive(e, slot); };
            };
            auto positive_int = [](int& slot) {
                return [&slot](const IniEntry& e) { slot = to_int(e); require_positive(e, slot); };
            };
            dispatch(s, {
                {"seed", [&](const IniEntry& e) { cfg.seed = to_u64(e); }},
                {"threads", [&](const IniEntry& e) {
                     cfg.threads = to_int(e);
                     if (cfg.threads < 0) throw ConfigError("'threads' must be >= 0", e.line, e.value_column);
                 }},
                {"budget", positive(cfg.budget)},
                {"window", [&](const IniEntry& e) {
                     cfg.window = to_number(e);
                     if (!(cfg.window > 0.0 && cfg.window <= 1.0))
                         throw ConfigError("'window' must lie in (0, 1]", e.line, e.value_column);
                 }},
                {"agreement_tolerance", positive(cfg.agreement_tolerance)},
                {"agreement_ratio", positive(cfg.agreement_ratio)},
                {"exact_floor", positive(cfg.exact_floor)},
                {"order_tolerance", positive(cfg.order_tolerance)},
                {"reference_lower", [&](const IniEntry& e) { cfg.reference_lower = to_number(e); }},
                {"reference_upper", [&](const IniEntry& e) { cfg.reference_upper = to_number(e); }},
                {"reference_tolerance", positive(cfg.reference_tolerance)},
                {"probe_count", positive_int(cfg.probe_count)},
                {"probe_c", positive(cfg.probe_c)},
                {"holder_min", positive(cfg.holder_min)},
                {"lipschitz_growth", positive(cfg.lipschitz_growth)},
                {"certify_deltas", [&](const IniEntry& e) {
                     cfg.certify_deltas = to_list(e);
                     for (double d : cfg.certify_deltas) require_positive(e, d);
                 }},
                {"certify_steps", positive_int(cfg.certify_steps)},
                {"supinf_steps", positive_int(cfg.supinf_steps)},
                {"certify_x", [&](const IniEntry& e) { cfg.certify_x = to_list(e); }},
                {"certify_phi", [&](const IniEntry& e) {
                     if (e.value != "squared_norm" && e.value != "zero" && e.value != "time_linear")
                         throw ConfigError("'certify_phi' must be squared_norm, zero or time_linear", e.line,
                                           e.value_column);
                     cfg.certify_phi = e.value;
                 }},
                {"rate_min_slope", positive(cfg.rate_min_slope)},
                {"oracle_instances", positive_int(cfg.oracle_instances)},
                {"oracle_steps", positive_int(cfg.oracle_steps)},
                {"oracle_tolerance", positive(cfg.oracle_tolerance)},
                {"bsde_instances", positive_int(cfg.bsde_instances)},
                {"bsde_steps", positive_int(cfg.bsde_steps)},
                {"identity_instances", positive_int(cfg.identity_instances)},
                {"supinf_instances", positive_int(cfg.supinf_instances)},
                {"ode_tolerance", positive(cfg.ode_tolerance)},
            });
        } else if (s.name == "output") {
            dispatch(s, {
                {"dir", [&](const IniEntry& e) { cfg.out_dir = e.value; }},
                {"formats", [&](const IniEntry& e) {
                     cfg.write_binary = false;
                     bool csv = false;
                     std::stringstream ss(e.value);
                     std::string item;
                     while (std::getline(ss, item, ',')) {
                         const std::size_t a = skip_blank(item, 0);
                         item = a == std::string::npos ? "" : rtrim(item.substr(a));
                         if (item == "csv") csv = true;
                         else if (item == "binary") cfg.write_binary = true;
                         else throw ConfigError("unknown format '" + item + "'", e.line, e.value_column);
                     }
                     if (!csv) throw ConfigError("'formats' must include csv", e.line, e.value_column);
                 }},
            });
        }
    }

    // Family and parameters.
    GameInstance inst;
    try {
        inst = make_game(cfg.family, cfg.params);
    } catch (const std::invalid_argument& ex) {
        const std::string msg = ex.what();
        const IniEntry* at = family_entry;
        for (const auto& [k, v] : cfg.params) {
            (void)v;
            if (msg.find("'" + k + "'") != std::string::npos) at = where.at("game." + k);
        }
        throw ConfigError(msg, at->line, at == family_entry ? at->value_column : at->column);
    }

    const int dim = inst.spec.dim_state;
    auto broadcast = [&](auto& list, const char* key) {
        const auto it = where.find(std::string("grids.") + key);
        if (list.size() == 1 && dim > 1) list.assign(static_cast<std::size_t>(dim), list.front());
        if (static_cast<int>(list.size()) != dim) {
            const std::string msg = std::string("'") + key + "' needs 1 or " + std::to_string(dim) + " entries";
            if (it != where.end()) throw ConfigError(msg, it->second->line, it->second->value_column);
            throw ConfigError(msg);
        }
    };
    broadcast(cfg.x_min, "x_min");
    broadcast(cfg.x_max, "x_max");
    broadcast(cfg.nodes, "nodes");
    broadcast(cfg.x0, "x0");
    if (cfg.certify_x.empty()) cfg.certify_x = cfg.x0;
    if (static_cast<int>(cfg.certify_x.size()) != dim) {
        const IniEntry* e = where.at("run.certify_x");
        throw ConfigError("'certify_x' needs " + std::to_string(dim) + " entries", e->line, e->value_column);
    }
    for (int i = 0; i < dim; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (!(cfg.x_min[ui] < cfg.x_max[ui])) {
            const auto it = where.find("grids.x_max");
            if (it != where.end()) throw ConfigError("x_max must exceed x_min", it->second->line, it->second->value_column);
            throw ConfigError("x_max must exceed x_min");
        }
        if (cfg.nodes[ui] < 3) {
            const auto it = where.find("grids.nodes");
            throw ConfigError("each axis needs at least 3 nodes", it->second->line, it->second->value_column);
        }
    }
    const double t1 = cfg.end_time(inst.spec.horizon);
    if (!(cfg.t0 >= 0.0 && cfg.t0 < t1 && t1 <= inst.spec.horizon * (1.0 + 1e-12))) {
        const auto it = where.find(cfg.t1 ? "grids.t1" : "grids.t0");
        const std::string msg = "time window must satisfy 0 <= t0 < t1 <= horizon";
        if (it != where.end()) throw ConfigError(msg, it->second->line, it->second->value_column);
        throw ConfigError(msg);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace isaacs
