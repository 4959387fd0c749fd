#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace atract::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);
// Digest over the sorted (relative path, file digest) pairs of a directory tree.
std::string sha256_tree(const std::filesystem::path& dir);

// One directory per invocation. The manifest records the subcommand, resolved
// configuration, seeds, input digests and output digests; timestamps are the
// only fields that differ between identical invocations.
class RunDir {
public:
    RunDir(std::filesystem::path dir, std::string subcommand, nlohmann::json config);

    const std::filesystem::path& path() const { return dir_; }
    std::filesystem::path operator/(const std::string& rel) const { return dir_ / rel; }

    void add_input(const std::string& role, const std::filesystem::path& p);
    void set_seed(const std::string& name, std::uint64_t seed);
    void note(const std::string& key, nlohmann::json value);
    // Hashes every file under the run directory and writes manifest.json.
    void finish();

    // <runs>/<subcommand>-<first 12 hex digits of the config digest>
    static std::filesystem::path default_path(const std::filesystem::path& runs, const std::string& subcommand,
                                              const nlohmann::json& config);

private:
    std::filesystem::path dir_;
    nlohmann::json manifest_;
};

}  // namespace atract::cli
