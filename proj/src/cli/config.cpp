#include "evqoe/cli/config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"

namespace evqoe::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Config Config::parse(std::istream& in, const std::filesystem::path& base_dir) {
    Config c;
    c.base_dir_ = base_dir;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3) {
                throw ArgumentError(fmt::format("config line {}: malformed section header", lineno));
            }
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ArgumentError(fmt::format("config line {}: expected key = value", lineno));
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw ArgumentError(fmt::format("config line {}: empty key", lineno));
        c.set(section.empty() ? key : section + "." + key, trim(std::string_view(t).substr(eq + 1)));
    }
    return c;
}

Config Config::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError(fmt::format("cannot open config file '{}'", file.string()));
    return parse(in, std::filesystem::absolute(file).parent_path());
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void Config::apply_override(const std::string& arg) {
    std::string_view s = arg;
    while (!s.empty() && s.front() == '-') s.remove_prefix(1);
    const auto eq = s.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ArgumentError(fmt::format("override '{}' must have the form --key=value", arg));
    }
    set(std::string(s.substr(0, eq)), std::string(s.substr(eq + 1)));
}

bool Config::has(const std::string& key) const { return entries_.contains(key); }

std::string Config::get(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end() || it->second.empty()) {
        throw ArgumentError(fmt::format("missing required config key '{}'", key));
    }
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto v = csv::parse_double(get(key, ""));
    if (!v) throw ArgumentError(fmt::format("config key '{}' is not a number: '{}'", key, get(key, "")));
    return *v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const auto v = csv::parse_int(get(key, ""));
    if (!v) throw ArgumentError(fmt::format("config key '{}' is not an integer: '{}'", key, get(key, "")));
    return *v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key, "");
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ArgumentError(fmt::format("config key '{}' is not a boolean: '{}'", key, v));
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    std::vector<std::string> out;
    const std::string v = get(key, "");
    std::size_t pos = 0;
    while (pos <= v.size()) {
        const auto comma = v.find(',', pos);
        const std::string item = trim(std::string_view(v).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> Config::get_double_list(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& s : get_list(key)) {
        const auto v = csv::parse_double(s);
        if (!v) throw ArgumentError(fmt::format("config key '{}': '{}' is not a number", key, s));
        out.push_back(*v);
    }
    return out;
}

std::vector<int> Config::get_int_list(const std::string& key, const std::vector<int>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<int> out;
    for (const auto& s : get_list(key)) {
        const auto v = csv::parse_int(s);
        if (!v) throw ArgumentError(fmt::format("config key '{}': '{}' is not an integer", key, s));
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

std::optional<std::filesystem::path> Config::path(const std::string& key) const {
    const std::string v = get(key, "");
    if (v.empty()) return std::nullopt;
    std::filesystem::path p(v);
    if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
    return p;
}

std::uint64_t Config::seed() const {
    const auto v = get_int("seed", 1);
    if (v < 0) throw ArgumentError("seed must be non-negative");
    return static_cast<std::uint64_t>(v);
}

std::filesystem::path Config::out_dir() const { return path("out").value_or("out"); }

}  // namespace evqoe::cli
