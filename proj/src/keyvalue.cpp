#include "levelperc/keyvalue.hpp"

#include "levelperc/point_process.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace levelperc {

namespace {

std::string trim(std::string const& s)
{
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    auto const e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(std::string const& key)
{
    return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
    });
}

} // namespace

KeyValueFile KeyValueFile::parse(std::istream& in, std::string const& source)
{
    KeyValueFile kv;
    kv.source_ = source;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto const t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        auto const eq = t.find('=');
        auto const where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'key = value'");
        }
        auto key = trim(t.substr(0, eq));
        auto value = trim(t.substr(eq + 1));
        if (!valid_key(key)) {
            throw ConfigError(where + ": malformed key '" + key + "'");
        }
        if (kv.has(key)) {
            throw ConfigError(where + ": duplicate key '" + key + "'");
        }
        kv.entries_.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

KeyValueFile KeyValueFile::load(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    return parse(in, path.string());
}

bool KeyValueFile::has(std::string const& key) const { return find(key).has_value(); }

std::optional<std::string> KeyValueFile::find(std::string const& key) const
{
    for (auto const& [k, v] : entries_) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

std::string const& KeyValueFile::get(std::string const& key) const
{
    for (auto const& [k, v] : entries_) {
        if (k == key) {
            return v;
        }
    }
    throw ConfigError(source_ + ": missing required key '" + key + "'");
}

void KeyValueFile::set(std::string const& key, std::string value)
{
    if (!valid_key(key)) {
        throw ConfigError("malformed key '" + key + "'");
    }
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(key, std::move(value));
}

void KeyValueFile::erase(std::string const& key)
{
    std::erase_if(entries_, [&](auto const& e) { return e.first == key; });
}

std::string KeyValueFile::get_string(std::string const& key, std::string fallback) const
{
    auto v = find(key);
    return v ? *v : std::move(fallback);
}

double KeyValueFile::get_double(std::string const& key) const
{
    auto const& text = get(key);
    try {
        return parse_double(text);
    } catch (std::exception const&) {
        throw ConfigError(source_ + ": key '" + key + "' expects a number, got '" + text + "'");
    }
}

double KeyValueFile::get_double(std::string const& key, double fallback) const
{
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t KeyValueFile::get_uint(std::string const& key, std::uint64_t fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    std::uint64_t out = 0;
    auto const [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
        throw ConfigError(source_ + ": key '" + key + "' expects a non-negative integer, got '" + *v + "'");
    }
    return out;
}

bool KeyValueFile::get_bool(std::string const& key, bool fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "yes" || *v == "1") {
        return true;
    }
    if (*v == "false" || *v == "no" || *v == "0") {
        return false;
    }
    throw ConfigError(source_ + ": key '" + key + "' expects true or false, got '" + *v + "'");
}

std::vector<double> KeyValueFile::get_list(std::string const& key, std::vector<double> fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto const t = trim(item);
        try {
            out.push_back(parse_double(t));
        } catch (std::exception const&) {
            throw ConfigError(source_ + ": key '" + key + "' has a non-numeric entry '" + t + "'");
        }
    }
    return out;
}

void KeyValueFile::require_known(std::set<std::string> const& allowed) const
{
    for (auto const& [k, v] : entries_) {
        if (!allowed.contains(k)) {
            throw ConfigError(source_ + ": unknown key '" + k + "'");
        }
    }
}

void KeyValueFile::write(std::ostream& out) const
{
    for (auto const& [k, v] : entries_) {
        out << k << " = " << v << '\n';
    }
}

std::string format_list(std::vector<double> const& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? ", " : "") + format_double(values[i]);
    }
    return out;
}

std::set<std::string> const& kernel_keys()
{
    static std::set<std::string> const keys{"kernel.kind",   "kernel.radius",   "kernel.scale",
                                            "kernel.amplitude", "kernel.cutoff", "kernel.exponent",
                                            "kernel.capped", "kernel.table"};
    return keys;
}

AttenuationSpec kernel_from_config(KeyValueFile const& cfg, std::filesystem::path const& base_dir)
{
    auto const kind = kernel_kind_from_string(cfg.get("kernel.kind"));
    auto only = [&](std::set<std::string> const& allowed) {
        for (auto const& k : kernel_keys()) {
            if (k != "kernel.kind" && cfg.has(k) && !allowed.contains(k)) {
                throw ConfigError("key '" + k + "' does not apply to kernel kind " + to_string(kind));
            }
        }
    };
    switch (kind) {
    case KernelKind::indicator:
        only({"kernel.radius"});
        return AttenuationSpec::indicator(cfg.get_double("kernel.radius"));
    case KernelKind::exponential:
        only({"kernel.scale", "kernel.cutoff", "kernel.amplitude"});
        return AttenuationSpec::exponential(cfg.get_double("kernel.scale", 1.0),
                                            cfg.get_double("kernel.cutoff", kInfinity),
                                            cfg.get_double("kernel.amplitude", 1.0));
    case KernelKind::power_law:
        only({"kernel.exponent", "kernel.scale", "kernel.amplitude", "kernel.capped"});
        return AttenuationSpec::power_law(cfg.get_double("kernel.exponent"), cfg.get_double("kernel.scale", 1.0),
                                          cfg.get_double("kernel.amplitude", 1.0),
                                          cfg.get_bool("kernel.capped", true));
    case KernelKind::truncated_power_law:
        only({"kernel.exponent", "kernel.cutoff", "kernel.scale", "kernel.amplitude", "kernel.capped"});
        return AttenuationSpec::truncated_power_law(
            cfg.get_double("kernel.exponent"), cfg.get_double("kernel.cutoff"), cfg.get_double("kernel.scale", 1.0),
            cfg.get_double("kernel.amplitude", 1.0), cfg.get_bool("kernel.capped", true));
    case KernelKind::tabulated: {
        only({"kernel.table"});
        std::filesystem::path p = cfg.get("kernel.table");
        if (p.is_relative() && !base_dir.empty()) {
            p = base_dir / p;
        }
        return AttenuationSpec::from_table_file(p);
    }
    }
    throw ConfigError("unhandled kernel kind");
}

void kernel_to_config(AttenuationSpec const& spec, KeyValueFile& cfg)
{
    cfg.set("kernel.kind", to_string(spec.kind()));
    spec.visit([&](auto const& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, kernels::Indicator>) {
            cfg.set("kernel.radius", format_double(k.radius));
        } else if constexpr (std::is_same_v<K, kernels::Exponential>) {
            cfg.set("kernel.scale", format_double(k.scale));
            cfg.set("kernel.amplitude", format_double(k.amplitude));
            if (std::isfinite(k.cutoff)) {
                cfg.set("kernel.cutoff", format_double(k.cutoff));
            }
        } else if constexpr (std::is_same_v<K, kernels::PowerLaw>) {
            cfg.set("kernel.exponent", format_double(k.exponent));
            cfg.set("kernel.scale", format_double(k.scale));
            cfg.set("kernel.amplitude", format_double(k.amplitude));
            cfg.set("kernel.capped", k.capped ? "true" : "false");
            if (std::isfinite(k.cutoff)) {
                cfg.set("kernel.cutoff", format_double(k.cutoff));
            }
        } else {
            throw ConfigError("tabulated kernels are configured by table path, not by value");
        }
    });
}

} // namespace levelperc
