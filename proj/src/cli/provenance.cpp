#include "evqoe/cli/provenance.hpp"

#include <array>
#include <fstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "evqoe/core/errors.hpp"

namespace evqoe::cli {

namespace {

class Digest {
public:
    Digest() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw IoError("sha256: init failed");
    }
    ~Digest() { EVP_MD_CTX_free(ctx_); }
    Digest(const Digest&) = delete;
    Digest& operator=(const Digest&) = delete;

    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_, data, n) != 1) throw IoError("sha256: update failed");
    }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, md.data(), &len) != 1) throw IoError("sha256: final failed");
        std::string out;
        for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_bytes(std::string_view bytes) {
    Digest d;
    d.update(bytes.data(), bytes.size());
    return d.hex();
}

std::string sha256_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read '{}'", file.string()));
    Digest d;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

void Provenance::add_input(const std::filesystem::path& file, std::string label) {
    inputs.push_back({std::move(label), sha256_file(file)});
}

void Provenance::write_csv_header(std::ostream& out) const {
    out << "# tool: " << kToolName << ' ' << kToolVersion << '\n';
    out << "# stage: " << stage << '\n';
    out << "# seed: " << seed << '\n';
    for (const auto& in : inputs) out << "# input: " << in.label << " sha256=" << in.sha256 << '\n';
}

nlohmann::ordered_json Provenance::to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["stage"] = stage;
    j["seed"] = seed;
    auto& arr = j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& in : inputs) arr.push_back({{"path", in.label}, {"sha256", in.sha256}});
    return j;
}

}  // namespace evqoe::cli
