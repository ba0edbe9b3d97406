#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace evqoe::cli {

inline constexpr const char* kToolName = "evqoe";
inline constexpr const char* kToolVersion = "1.0.0";

/// Lower-case hex SHA-256 of a file's bytes; throws IoError when unreadable.
std::string sha256_file(const std::filesystem::path& file);
std::string sha256_bytes(std::string_view bytes);

struct InputRef {
    std::string label;  ///< path as configured, or relative to the output root
    std::string sha256;
};

/// Tool version, seed and hashed inputs stamped on every artifact. Carries no timestamps.
struct Provenance {
    std::string stage;
    std::uint64_t seed = 0;
    std::vector<InputRef> inputs;

    void add_input(const std::filesystem::path& file, std::string label);
    /// '#'-prefixed lines; CSV readers in this toolkit skip them.
    void write_csv_header(std::ostream& out) const;
    nlohmann::ordered_json to_json() const;
};

}  // namespace evqoe::cli
