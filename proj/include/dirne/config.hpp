#pragma once

// Line-oriented run configuration:
//
//   # comment
//   [section]
//   key = value
//
// Sections and keys are checked against a fixed schema; anything unknown is
// a ConfigError. Keys with physical units carry the unit as a suffix
// (_deg, _m, _ns).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dirne {

class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "<config>");
    static Config load(const std::filesystem::path& path);

    /// Override from "section.key=value"; the schema applies.
    void set(const std::string& assignment);
    void set(const std::string& section, const std::string& key, const std::string& value);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key) const;
    std::uint64_t get_uint(const std::string& section, const std::string& key) const;
    bool get_bool(const std::string& section, const std::string& key) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key) const;

    std::optional<std::string> find_string(const std::string& section, const std::string& key) const;
    std::optional<double> find_double(const std::string& section, const std::string& key) const;
    std::optional<std::uint64_t> find_uint(const std::string& section, const std::string& key) const;
    std::optional<bool> find_bool(const std::string& section, const std::string& key) const;

    /// section → key → raw value.
    const std::map<std::string, std::map<std::string, std::string>>& entries() const { return entries_; }

private:
    std::map<std::string, std::map<std::string, std::string>> entries_;
};

/// Parses a nonnegative integer, also in floating notation when exact
/// (e.g. "3.168e12"). Throws ConfigError.
std::uint64_t parse_count_value(const std::string& text, const std::string& what);
double parse_double_value(const std::string& text, const std::string& what);

}  // namespace dirne
