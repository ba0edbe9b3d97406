#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evqoe::cli {

/// Flat key-value run configuration.
///
/// File grammar, one entry per line:
///   # comment            (also ';' comments)
///   [section]            following keys become section.key
///   key = value          surrounding whitespace trimmed; later entries win
///
/// Values are typed on access. Relative paths resolve against the config file's directory.
class Config {
public:
    static Config parse(std::istream& in, const std::filesystem::path& base_dir = {});
    static Config load(const std::filesystem::path& file);

    void set(const std::string& key, const std::string& value);
    /// Applies "key=value" (leading dashes allowed); throws ArgumentError on other shapes.
    void apply_override(const std::string& arg);

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    std::string require(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    /// Path value resolved against the base directory; empty when the key is absent.
    std::optional<std::filesystem::path> path(const std::string& key) const;

    std::uint64_t seed() const;
    std::filesystem::path out_dir() const;
    std::vector<std::string> site_filter() const { return get_list("sites"); }

    const std::map<std::string, std::string>& entries() const { return entries_; }
    const std::filesystem::path& base_dir() const { return base_dir_; }
    void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

private:
    std::map<std::string, std::string> entries_;
    std::filesystem::path base_dir_;
};

}  // namespace evqoe::cli
