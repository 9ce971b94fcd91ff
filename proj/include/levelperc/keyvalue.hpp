#pragma once

#include "levelperc/attenuation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace levelperc {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered `key = value` records. Blank lines and lines starting with '#'
/// are ignored; duplicate keys are errors.
class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in, std::string const& source = "<input>");
    static KeyValueFile load(std::filesystem::path const& path);

    bool has(std::string const& key) const;
    std::optional<std::string> find(std::string const& key) const;
    std::string const& get(std::string const& key) const;
    /// Inserts or replaces, keeping the original position of an existing key.
    void set(std::string const& key, std::string value);
    void erase(std::string const& key);

    std::string get_string(std::string const& key, std::string fallback) const;
    double get_double(std::string const& key, double fallback) const;
    double get_double(std::string const& key) const;
    std::uint64_t get_uint(std::string const& key, std::uint64_t fallback) const;
    bool get_bool(std::string const& key, bool fallback) const;
    /// Comma-separated list of numbers.
    std::vector<double> get_list(std::string const& key, std::vector<double> fallback) const;

    /// Throws ConfigError naming the first key not in `allowed`.
    void require_known(std::set<std::string> const& allowed) const;

    std::vector<std::pair<std::string, std::string>> const& entries() const noexcept { return entries_; }
    void write(std::ostream& out) const;

    bool operator==(KeyValueFile const&) const = default;

private:
    std::string source_ = "<input>";
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_list(std::vector<double> const& values);

/// Keys understood by kernel_from_config.
std::set<std::string> const& kernel_keys();

/// kernel.kind = indicator | exponential | power-law | truncated-power-law | tabulated,
/// with kernel.radius, kernel.scale, kernel.amplitude, kernel.cutoff,
/// kernel.exponent, kernel.capped and kernel.table as the family needs.
/// Relative table paths resolve against `base_dir`.
AttenuationSpec kernel_from_config(KeyValueFile const& cfg, std::filesystem::path const& base_dir = {});

/// Writes the kernel keys for a non-tabulated spec.
void kernel_to_config(AttenuationSpec const& spec, KeyValueFile& cfg);

} // namespace levelperc
