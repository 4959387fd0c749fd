#include "run_dir.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "atract/common/error.hpp"

namespace atract::cli {

namespace fs = std::filesystem;

namespace {

class Digest {
public:
    Digest() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) fail(ErrorKind::io, "sha256 init failed");
    }
    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 0xF];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<fs::path> files_under(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    Digest d;
    d.update(bytes.data(), bytes.size());
    return d.hex();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::not_found, "cannot read " + path.string());
    Digest d;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

std::string sha256_tree(const fs::path& dir) {
    std::string listing;
    for (const auto& rel : files_under(dir)) listing += rel.generic_string() + ' ' + sha256_file(dir / rel) + '\n';
    return sha256_hex(listing);
}

RunDir::RunDir(fs::path dir, std::string subcommand, nlohmann::json config) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    manifest_ = {{"tool", "atract"},
                 {"subcommand", std::move(subcommand)},
                 {"config", std::move(config)},
                 {"seeds", nlohmann::json::object()},
                 {"inputs", nlohmann::json::array()},
                 {"started_at", utc_now()}};
}

void RunDir::add_input(const std::string& role, const fs::path& p) {
    if (!fs::exists(p)) fail(ErrorKind::not_found, role + " not found: " + p.string());
    const auto digest = fs::is_directory(p) ? sha256_tree(p) : sha256_file(p);
    manifest_["inputs"].push_back({{"role", role}, {"path", p.generic_string()}, {"sha256", digest}});
}

void RunDir::set_seed(const std::string& name, std::uint64_t seed) { manifest_["seeds"][name] = seed; }

void RunDir::note(const std::string& key, nlohmann::json value) { manifest_[key] = std::move(value); }

void RunDir::finish() {
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& rel : files_under(dir_)) {
        if (rel == "manifest.json") continue;
        outputs.push_back({{"path", rel.generic_string()}, {"sha256", sha256_file(dir_ / rel)}});
    }
    manifest_["outputs"] = std::move(outputs);
    manifest_["finished_at"] = utc_now();
    std::ofstream(dir_ / "manifest.json") << manifest_.dump(2) << '\n';
}

fs::path RunDir::default_path(const fs::path& runs, const std::string& subcommand, const nlohmann::json& config) {
    return runs / (subcommand + "-" + sha256_hex(config.dump()).substr(0, 12));
}

}  // namespace atract::cli
