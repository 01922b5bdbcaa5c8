#include "dirne/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dirne/errors.hpp"

namespace dirne {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"protocol", {"n", "gamma", "omega_exp", "delta", "threshold_mode", "tally"}},
        {"budget", {"eps_s", "eps_c", "extractor_fraction"}},
        {"search", {"alpha", "t", "c_perp", "max_sweeps"}},
        {"plan", {"gamma_grid_points", "parallel", "sweep_csv"}},
        {"device", {"model", "omega", "theta_deg", "a0_deg", "a1_deg", "b0_deg", "b1_deg", "eta_a", "eta_b"}},
        {"simulate", {"seed", "record_threshold", "block_rounds", "tally_out", "raw_out", "parallel"}},
        {"extract",
         {"input", "seed_file", "seed_rng", "seed_out", "output", "m_bits", "k_bits", "certificate", "block_len",
          "parallel"}},
        {"curve", {"kind", "scores", "n_grid", "gammas", "gamma", "output"}},
        {"geometry",
         {"dist_sa_m", "dist_sb_m", "path_sa_m", "path_sb_m", "t_e_ns", "t_qrng_a_ns", "t_qrng_b_ns", "t_delay_a_ns",
          "t_delay_b_ns", "t_pc_a_ns", "t_pc_b_ns", "t_m_a_ns", "t_m_b_ns"}},
    };
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void check_key(const std::string& section, const std::string& key, const std::string& where) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError(where + ": unknown section [" + section + "]");
    if (!it->second.count(key)) throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
}

std::string name(const std::string& section, const std::string& key) { return section + "." + key; }

}  // namespace

double parse_double_value(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ConfigError(what + ": expected a number, got '" + text + "'");
    }
    return v;
}

std::uint64_t parse_count_value(const std::string& text, const std::string& what) {
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec == std::errc() && ptr == end) return v;
    const double d = parse_double_value(text, what);
    if (!(d >= 0.0 && d < 0x1.0p64 && std::floor(d) == d)) {
        throw ConfigError(what + ": expected a nonnegative integer, got '" + text + "'");
    }
    return static_cast<std::uint64_t>(d);
}

Config Config::parse(std::istream& in, const std::string& origin) {
    Config cfg;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema().count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        if (section.empty()) throw ConfigError(where + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        check_key(section, key, where);
        auto& slot = cfg.entries_[section];
        if (slot.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        slot[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

void Config::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    }
    set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
        trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    check_key(section, key, "override");
    entries_[section][key] = value;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find_string(section, key).has_value();
}

std::optional<std::string> Config::find_string(const std::string& section, const std::string& key) const {
    const auto s = entries_.find(section);
    if (s == entries_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    auto v = find_string(section, key);
    if (!v) throw ConfigError("missing required key " + name(section, key));
    return *v;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    return parse_double_value(get_string(section, key), name(section, key));
}

std::uint64_t Config::get_uint(const std::string& section, const std::string& key) const {
    return parse_count_value(get_string(section, key), name(section, key));
}

bool Config::get_bool(const std::string& section, const std::string& key) const {
    const std::string v = get_string(section, key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(name(section, key) + ": expected a boolean, got '" + v + "'");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get_string(section, key));
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double_value(item, name(section, key)));
    }
    if (out.empty()) throw ConfigError(name(section, key) + ": empty list");
    return out;
}

std::optional<double> Config::find_double(const std::string& section, const std::string& key) const {
    if (!has(section, key)) return std::nullopt;
    return get_double(section, key);
}

std::optional<std::uint64_t> Config::find_uint(const std::string& section, const std::string& key) const {
    if (!has(section, key)) return std::nullopt;
    return get_uint(section, key);
}

std::optional<bool> Config::find_bool(const std::string& section, const std::string& key) const {
    if (!has(section, key)) return std::nullopt;
    return get_bool(section, key);
}

}  // namespace dirne
